#!/usr/bin/env python3
"""Regenerate the FCIDUMP fixtures and the reference-energy manifest.

Requires PySCF (tested with 2.14). Run from this directory:

    python3 generate_fixtures.py

Every file is written in the Molpro FCIDUMP convention with molecular-orbital
integrals (chemist notation, 1-based indices). The core energy line carries
only the nuclear repulsion; frozen-core folding is done by the Rust side.

H2O orbitals are reordered so that the frozen core comes first and the
active window follows immediately: frozen = two lowest A1 plus the occupied
B1 (out-of-plane lone pair), active = the two highest occupied A1/B2 orbitals
together with the lowest virtual A1 and B2 orbitals.
"""

import json
import os

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf, symm

HERE = os.path.dirname(os.path.abspath(__file__))
MOLPRO_C2V = {"A1": 1, "B1": 2, "B2": 3, "A2": 4}


def write_fcidump(path, h1, eri, norb, nelec, ecore, orbsym=None, tol=1e-12):
    eri = ao2mo.restore(8, eri, norb)
    with open(path, "w") as f:
        f.write(f" &FCI NORB={norb:d},NELEC={nelec:d},MS2=0,\n")
        syms = orbsym if orbsym is not None else [1] * norb
        f.write("  ORBSYM=" + ",".join(str(s) for s in syms) + ",\n")
        f.write("  ISYM=1,\n &END\n")
        ij = 0
        for i in range(norb):
            for j in range(i + 1):
                kl = 0
                for k in range(norb):
                    for l in range(k + 1):
                        if ij >= kl:
                            v = eri[ij * (ij + 1) // 2 + kl]
                            if abs(v) > tol:
                                f.write(f"{v: .16e} {i+1:4d} {j+1:4d} {k+1:4d} {l+1:4d}\n")
                        kl += 1
                ij += 1
        for i in range(norb):
            for j in range(i + 1):
                if abs(h1[i, j]) > tol:
                    f.write(f"{h1[i, j]: .16e} {i+1:4d} {j+1:4d}    0    0\n")
        f.write(f"{ecore: .16e}    0    0    0    0\n")


def mo_integrals(mf, mo):
    mol = mf.mol
    h1 = mo.T @ mf.get_hcore() @ mo
    eri = ao2mo.full(mol, mo, compact=True)
    return h1, eri


def h2(R):
    mol = gto.M(atom=[["H", (0, 0, 0)], ["H", (0, 0, R)]], basis="sto-3g",
                unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.run()
    e_fci, _ = fci.FCI(mf).kernel()
    return mol, mf, mf.mo_coeff, e_fci, None


def h3p(R):
    rad = R / np.sqrt(3.0)
    atoms = [["H", (rad * np.cos(a), rad * np.sin(a), 0.0)]
             for a in (0.0, 2 * np.pi / 3, 4 * np.pi / 3)]
    mol = gto.M(atom=atoms, basis="sto-6g", charge=1, spin=0,
                unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.run()
    e_fci, _ = fci.FCI(mf).kernel()
    return mol, mf, mf.mo_coeff, e_fci, None


def h2o(R, angle):
    half = np.radians(angle / 2.0)
    atoms = [["O", (0.0, 0.0, 0.0)],
             ["H", (R * np.sin(half), R * np.cos(half), 0.0)],
             ["H", (-R * np.sin(half), R * np.cos(half), 0.0)]]
    mol = gto.M(atom=atoms, basis="6-31g", unit="Angstrom", verbose=0,
                symmetry=True)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.max_cycle = 300
    mf.run()
    if not mf.converged:
        mf = scf.newton(mf).run()
    mc = mcscf.CASCI(mf, 4, 4)
    mc.verbose = 0
    mo = mc.sort_mo_by_irrep({"A1": 2, "B2": 2}, {"A1": 2, "B1": 1})
    mc.kernel(mo)
    irreps = symm.label_orb_symm(mol, mol.irrep_name, mol.symm_orb, mo)
    orbsym = [MOLPRO_C2V[s] for s in irreps]
    return mol, mf, mo, mc.e_tot, orbsym


def emit(subdir, name, label, builder, *args):
    os.makedirs(os.path.join(HERE, subdir), exist_ok=True)
    mol, mf, mo, e_ref, orbsym = builder(*args)
    h1, eri = mo_integrals(mf, mo)
    path = os.path.join(subdir, name)
    write_fcidump(os.path.join(HERE, path), h1, eri, mo.shape[1],
                  mol.nelectron, mol.energy_nuc(), orbsym)
    return {"file": path, "label": label, "rhf_energy": float(mf.e_tot),
            "reference_energy": float(e_ref), "n_orbitals": int(mo.shape[1]),
            "n_electrons": int(mol.nelectron)}


def main():
    manifest = {"generator": "pyscf", "entries": []}
    entries = manifest["entries"]

    entries.append(dict(emit("h2", "h2_0.7414.fcidump", 0.7414, h2, 0.7414),
                        molecule="H2", basis="STO-3G", method="FCI"))
    for R in (0.5, 0.7, 1.0, 1.5, 2.0):
        entries.append(dict(emit("h2_scan", f"h2_{R:.2f}.fcidump", R, h2, R),
                            molecule="H2", basis="STO-3G", method="FCI"))

    grid = [round(0.5 + 0.02 * i, 2) for i in range(101)] + [10.0]
    for R in grid:
        entries.append(dict(emit("h3p", f"h3p_{R:.2f}.fcidump", R, h3p, R),
                            molecule="H3+", basis="STO-6G", method="FCI"))
    entries.append(dict(emit("h3p_eq", "h3p_0.984.fcidump", 0.984, h3p, 0.984),
                        molecule="H3+", basis="STO-6G", method="FCI"))

    bond = [round(0.86 + 0.02 * i, 2) for i in range(13)] + [1.2, 1.4, 1.6, 2.0, 2.5, 10.0]
    for R in bond:
        entries.append(dict(emit("h2o_bond", f"h2o_{R:.2f}.fcidump", R, h2o, R, 104.48),
                            molecule="H2O", basis="6-31G", method="CASCI(4e,4o)",
                            angle=104.48, frozen=3, active=4))
    for A in range(100, 121):
        entries.append(dict(emit("h2o_angle", f"h2o_{A:.1f}.fcidump", float(A), h2o, 0.9578, float(A)),
                            molecule="H2O", basis="6-31G", method="CASCI(4e,4o)",
                            bond_length=0.9578, frozen=3, active=4))

    with open(os.path.join(HERE, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)


if __name__ == "__main__":
    main()
