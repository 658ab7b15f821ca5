"""Group the QLCs of each labelled metric on F by their Laplacian."""

from fqrg import catalog as cat
from fqrg.connection import classify_connections
from fqrg.geometry import laplacian

C = cat.build_calculus("F.univ")
E = cat.build_exterior("eps_F")
for k in range(1, 5):
    mid = f"g_F.{k}"
    M = cat.build_metric(mid)
    conns = [c for c, _ in classify_connections(C, E, M, "qlc", 1)]
    labels = cat.match_results(conns, [f"nabla_F.{k}.{j}" for j in range(1, 13) if f"nabla_F.{k}.{j}" in cat.fixture_ids("connection")])
    groups = {}
    for i, conn in enumerate(conns):
        L = laplacian(C, M, conn)
        groups.setdefault(L.matrix.tobytes(), (L, []))[1].append(labels.label_of(i))
    print(mid)
    for L, members in groups.values():
        massive = ", ".join(cat.format_element(v.coeffs, "F") for v in L.massive_eigenvectors) or "none"
        print(f"  trace {L.trace}, massive modes: {massive}; connections: {', '.join(members)}")
