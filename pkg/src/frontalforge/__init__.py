"""frontalforge: computational toolkit for cuspidal-edge surface germs.

Normal forms along singular curves, their isomers, induced developable
strips and curved foldings, connecting maps between frontal germs,
properness probes, and intrinsic symmetry detection.
"""

__version__ = "0.1.0"
