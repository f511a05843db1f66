#!/usr/bin/env python3
# Copyright (c) 2026 The qew Authors.
# Licensed under the Apache License 2.0.
"""Regenerates the mean-field fixtures under data/ (requires pyscf).

Each system produces an FCIDUMP in the canonical RHF MO basis. Systems used
for active-space selection also get an orbital bundle holding the AO overlap,
MO coefficients, occupations and MINAO projectors expanded in the AO basis.
Reference RHF/FCI energies are collected in data/reference.json.
"""
import json
import os
import sys

import numpy as np
from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def write_matrix(f, name, m):
    m = np.atleast_2d(m)
    f.write(f"{name} {m.shape[0]} {m.shape[1]}\n")
    for row in m:
        f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def minao_projectors(mol, labels):
    pmol = mol.copy()
    pmol.basis = "minao"
    pmol.build()
    idx = [i for i, l in enumerate(pmol.ao_labels()) if any(t in l for t in labels)]
    s = mol.intor("int1e_ovlp")
    s12 = gto.intor_cross("int1e_ovlp", mol, pmol)[:, idx]
    return np.linalg.solve(s, s12)


def run(name, atom, basis, charge=0, projector_labels=None, fci_ref=True):
    mol = gto.M(atom=atom, basis=basis, charge=charge, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    path = os.path.join(OUT, f"{name}.fcidump")
    fcidump.from_integrals(path, h1, eri, c.shape[1], mol.nelectron,
                           nuc=mol.energy_nuc(), ms=0, tol=1e-14)
    ref = {"e_hf": mf.e_tot, "n_orb": int(c.shape[1]), "n_elec": int(mol.nelectron)}
    if fci_ref:
        e_roots, _ = fci.direct_spin1.kernel(h1, eri, c.shape[1], mol.nelectron,
                                             ecore=mol.energy_nuc(), conv_tol=1e-13,
                                             nroots=4)
        ref["e_fci"] = float(min(e_roots))
    if projector_labels:
        with open(os.path.join(OUT, f"{name}.bundle"), "w") as f:
            f.write(f"# {name} {basis} RHF orbitals; projectors: {' '.join(projector_labels)}\n")
            write_matrix(f, "AO_OVERLAP", mol.intor("int1e_ovlp"))
            write_matrix(f, "MO_COEFF", c)
            write_matrix(f, "MO_OCC", mf.mo_occ[None, :])
            write_matrix(f, "PROJECTORS", minao_projectors(mol, projector_labels))
    return ref


def h4(a, b):
    return f"H 0 0 0; H {a} 0 0; H 0 {b} 0; H {a} {b} 0"


def main():
    refs = {
        "h2_sto3g": run("h2_sto3g", "H 0 0 0; H 0 0 0.74", "sto-3g"),
        "h3p_sto3g": run("h3p_sto3g", "H 0 0 0; H 0.9 0 0; H 0.45 0.78 0", "sto-3g", charge=1),
        "h4_sto3g": run("h4_sto3g", h4(1.2, 1.5), "sto-3g"),
        "h4_chain_sto3g": run("h4_chain_sto3g", "H 0 0 0; H 0.9 0.1 0; H 1.8 -0.2 0; H 2.85 0.15 0",
                              "sto-3g"),
        "h4_631g_r": run("h4_631g_r", "H 0 0 0; H 0.76 0.1 0; H 0.25 1.45 0; H 0.98 1.62 0",
                         "6-31g", projector_labels=["H 1s"]),
        "h4_631g_ts": run("h4_631g_ts", "H 0 0 0; H 1.12 0.12 0; H 0.1 1.22 0; H 1.27 1.38 0",
                          "6-31g", projector_labels=["H 1s"]),
        "h4_631g_p": run("h4_631g_p", "H 0 0 0; H 0.78 -0.06 0; H -0.3 1.5 0; H 0.42 1.72 0",
                         "6-31g", projector_labels=["H 1s"]),
        "h2o_631g": run("h2o_631g", "O 0 0 0; H 0 0.757 0.587; H 0 -0.757 0.587",
                        "6-31g", projector_labels=["O 2p", "O 2s", "H 1s"]),
    }
    with open(os.path.join(OUT, "reference.json"), "w") as f:
        json.dump(refs, f, indent=2, sort_keys=True)
        f.write("\n")
    json.dump(refs, sys.stdout, indent=2)


if __name__ == "__main__":
    main()
