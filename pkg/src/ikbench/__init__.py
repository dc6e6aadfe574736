"""Desk-scale workbench for infinitary intuitionistic first-order logic.

Submodules:
    syntax     sorted formulas, parsing, printing, substitution
    calculus   derivation objects and the rule checker
    kripke     finite Kripke models and forcing
    lattice    finite lattices, prime filters, duality
    catalog    enumeration of small posets and lattices
    saturate   coherent fragment: entailment, term models, canonical Kripke model
    cli        command line front end
"""

__version__ = "0.1.0"
