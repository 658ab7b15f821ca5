"""Recompute every published table and print the cell-level summary."""

from fqrg.reproduce import TARGETS, reproduce

for target in TARGETS:
    print(reproduce(target, workers=1).render())
