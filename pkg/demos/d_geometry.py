"""Walk through the full pipeline on the algebra D.

Builds the universal calculus, finds its quantum metrics, classifies the
Levi-Civita connections of each, and prints curvature, Laplacian and the
Ricci data for one lift.
"""

from fqrg import catalog as cat
from fqrg.calculus import solve_exterior
from fqrg.connection import classify_connections
from fqrg.geometry import curvature, enumerate_lifts, laplacian, ricci
from fqrg.metric import quantum_metrics

C = cat.build_calculus("D.univ")
E = cat.build_exterior("eps_D")
print("exterior solutions with a quantum symmetric metric:",
      len(solve_exterior(C, require_metric_qsym=cat.metric_tensor("g_D.1"))))

for M in quantum_metrics(C, E):
    report = cat.match_results([M], ["g_D.1", "g_D.2", "g_D.3"])
    label = report.pairs[0][1] if report.pairs else "unlabelled"
    print(f"\n{label}: g = {cat.format_tensor(M.g, 'D')}")
    conns = classify_connections(C, E, M, "qlc", 1)
    lifts = enumerate_lifts(C, E, M.g)
    for conn, _ in conns:
        R = curvature(C, E, conn)
        L = laplacian(C, M, conn)
        r = ricci(C, E, M, conn, lifts[0])
        print(f"  flat={R.flat!s:5}  trace(Laplacian)={L.trace}  S={cat.format_element(r.scalar, 'D')}")
