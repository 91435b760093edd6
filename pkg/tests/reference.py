"""Slow, dictionary-based reference implementations used as test oracles.

They follow the algorithm description line by line and share no code with
the package, so agreement on random inputs is meaningful.
"""


def ref_cluster(edges, degree, tau):
    cluster, vol, size, richest = {}, {}, {}, {}
    k = 1
    for u, v in edges:
        if u == v:
            continue
        for x in (u, v):
            if x not in cluster:
                cluster[x] = k
                vol[k] = degree[x]
                size[k] = 1
                k += 1
        cu, cv = cluster[u], cluster[v]
        if cu != cv and vol[cu] <= tau and vol[cv] <= tau:
            if vol[cu] <= vol[cv]:
                mover, src, dst = u, cu, cv
            else:
                mover, src, dst = v, cv, cu
            vol[src] -= degree[mover]
            size[src] -= 1
            vol[dst] += degree[mover]
            size[dst] += 1
            cluster[mover] = dst
        if u not in richest or degree[richest[u]] < degree[v]:
            richest[u] = v
        if v not in richest or degree[richest[v]] < degree[u]:
            richest[v] = u
    return cluster, richest


def ref_representatives(cluster, richest, degree):
    rep = {}
    for v in sorted(cluster):
        if v not in richest:
            continue
        i = cluster[v]
        if i not in rep or degree[richest[rep[i]]] < degree[richest[v]]:
            rep[i] = v
    return rep


def ref_merge(cluster, richest, degree, n, p, beta):
    """Merge loop with a linear scan for the smallest unprocessed cluster."""
    members = {}
    for v, i in cluster.items():
        members.setdefault(i, set()).add(v)
    rep = ref_representatives(cluster, richest, degree)
    owner = dict(cluster)
    bound = beta * n / p
    queue = set(members)
    while queue:
        i = min(queue, key=lambda c: (len(members[c]), c))
        queue.discard(i)
        if i not in rep:
            continue
        t = owner[richest[rep[i]]]
        if t == i or len(members[i]) + len(members[t]) > bound:
            continue
        for v in members[i]:
            owner[v] = t
        members[t] |= members.pop(i)
        rt = rep.get(t)
        if rt is None or degree[richest[rt]] < degree[richest[rep[i]]]:
            rep[t] = rep[i]
        queue.add(t)
    return owner, members


def ref_schedule(sizes, p):
    """List scheduling: largest first (ties by index) onto the lightest partition."""
    loads = [0] * p
    where = {}
    for i in sorted(sizes, key=lambda c: (-sizes[c], c)):
        s = min(range(p), key=lambda j: (loads[j], j))
        where[i] = s
        loads[s] += sizes[i]
    return where, loads


def ref_greedy(edges, p, slack):
    reps = {}
    load = [0] * p
    out = []
    for u, v in edges:
        cap = (1 + slack) * sum(load) / p + 1
        au, av = reps.get(u, set()), reps.get(v, set())
        classes = [au & av, au | av, set(range(p))]
        for k, cand in enumerate(classes):
            if k < 2:
                cand = {s for s in cand if load[s] < cap}
            if cand:
                s = min(cand, key=lambda j: (load[j], j))
                break
        out.append(s)
        load[s] += 1
        reps.setdefault(u, set()).add(s)
        reps.setdefault(v, set()).add(s)
    return out


def ref_hdrf(edges, p, lam, eps=1.0):
    """HDRF with partial degrees: C_rep + lam * C_bal, first maximum wins."""
    reps, deg = {}, {}
    load = [0] * p
    out = []
    for u, v in edges:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
        tu = deg[u] / (deg[u] + deg[v])
        tv = 1 - tu
        mx, mn = max(load), min(load)
        scores = []
        for s in range(p):
            rep = 0.0
            if s in reps.get(u, ()):
                rep += 1 + (1 - tu)
            if s in reps.get(v, ()):
                rep += 1 + (1 - tv)
            scores.append(rep + lam * (mx - load[s]) / (eps + mx - mn))
        s = scores.index(max(scores))
        out.append(s)
        load[s] += 1
        reps.setdefault(u, set()).add(s)
        reps.setdefault(v, set()).add(s)
    return out
