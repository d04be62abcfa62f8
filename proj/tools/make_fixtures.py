#!/usr/bin/env python3
"""Regenerates the synthetic switching fixtures in tests/data.

Each network is a random spanning tree of fixed lines plus chords marked
switchable.  Line ratings are set from an all-on merit-order dispatch so that
some chords congest, which is what makes opening lines pay off.

    python3 tools/make_fixtures.py            # write fixtures
    python3 tools/make_fixtures.py --check    # also print brute-force stats
"""

import argparse
import itertools
import pathlib
import random

import numpy as np
from scipy.optimize import linprog

DATA = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"


class Net:
    def __init__(self, base=100.0):
        self.base = base
        self.buses = []  # (id, demand, slack)
        self.gens = []  # (bus, cost, pmin, pmax)
        self.lines = []  # [id, from, to, b, cap, switchable]

    def text(self, header):
        out = [f"# {header}", f"base {self.base:g}"]
        out += [f"bus {i} {d:g} {int(s)}" for i, d, s in self.buses]
        out += [f"gen {b} {c:g} {lo:g} {hi:g}" for b, c, lo, hi in self.gens]
        out += [f"line {i} {f} {t} {b:g} {cap:g} {int(s)}" for i, f, t, b, cap, s in self.lines]
        return "\n".join(out) + "\n"


def merit_order(net, demand):
    total = sum(demand)
    p = [0.0] * len(net.gens)
    for g in sorted(range(len(net.gens)), key=lambda g: net.gens[g][1]):
        p[g] = min(net.gens[g][3], total)
        total -= p[g]
    return p


def dc_flows(net, demand, lines):
    n = len(net.buses)
    pos = {b[0]: i for i, b in enumerate(net.buses)}
    inj = np.array([-d for d in demand])
    for g, pg in enumerate(merit_order(net, demand)):
        inj[pos[net.gens[g][0]]] += pg
    lap = np.zeros((n, n))
    for _, f, t, b, _, _ in lines:
        bb = net.base * b
        i, j = pos[f], pos[t]
        lap[i, i] += bb
        lap[j, j] += bb
        lap[i, j] -= bb
        lap[j, i] -= bb
    theta = np.zeros(n)
    theta[1:] = np.linalg.solve(lap[1:, 1:], inj[1:])
    return {l[0]: net.base * l[3] * (theta[pos[l[1]]] - theta[pos[l[2]]]) for l in lines}


def rate(net, rng, congest, slack_factor):
    """Chords get a fraction of their all-on flow; fixed lines cover both the
    all-on and the chords-open flow patterns with margin."""
    demand = [b[1] for b in net.buses]
    on = dc_flows(net, demand, net.lines)
    tree = dc_flows(net, demand, [l for l in net.lines if not l[5]])
    chords = [l for l in net.lines if l[5]]
    congested = {l[0] for l in rng.sample(chords, max(1, round(congest * len(chords))))}
    for line in net.lines:
        f = on[line[0]]
        if line[0] in congested:
            line[4] = round(max(5.0, abs(f) * rng.uniform(0.75, 0.95)), 1)
        elif line[5]:
            line[4] = round(max(20.0, abs(f) * slack_factor + 10.0), 1)
        else:
            line[4] = round(max(20.0, max(abs(f), abs(tree[line[0]])) * slack_factor + 10.0), 1)


def random_mesh(seed, buses, switchable, congest=0.3, slack_factor=1.6, gens=4):
    rng = random.Random(seed)
    net = Net()
    for i in range(1, buses + 1):
        net.buses.append((i, round(rng.uniform(10, 60), 1) if i > 1 else 0.0, i == 1))
    edges = set()
    for i in range(2, buses + 1):
        j = rng.randint(max(1, i - 3), i - 1)
        edges.add((j, i))
        net.lines.append([len(net.lines) + 1, j, i, round(rng.uniform(4, 20), 2), 0.0, False])
    while sum(1 for l in net.lines if l[5]) < switchable:
        a, b = sorted(rng.sample(range(1, buses + 1), 2))
        if (a, b) in edges:
            continue
        edges.add((a, b))
        net.lines.append([len(net.lines) + 1, a, b, round(rng.uniform(4, 20), 2), 0.0, True])
    total = sum(b[1] for b in net.buses)
    gen_buses = sorted(rng.sample(range(1, buses + 1), gens))
    costs = sorted(rng.uniform(10, 60) for _ in gen_buses)
    rng.shuffle(costs)
    for b, c in zip(gen_buses, costs):
        net.gens.append((b, round(c, 2), 0.0, round(total * rng.uniform(0.4, 0.8), 1)))
    rate(net, rng, congest, slack_factor)
    return net


def grid(seed, rows, cols):
    rng = random.Random(seed)
    net = Net()
    idx = lambda r, c: r * cols + c + 1
    for r in range(rows):
        for c in range(cols):
            i = idx(r, c)
            net.buses.append((i, round(rng.uniform(10, 40), 1) if i > 1 else 0.0, i == 1))
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                # The first row and first column form the fixed comb.
                net.lines.append([len(net.lines) + 1, idx(r, c), idx(r, c + 1), round(rng.uniform(5, 15), 2), 0.0, r > 0])
            if r + 1 < rows:
                net.lines.append([len(net.lines) + 1, idx(r, c), idx(r + 1, c), round(rng.uniform(5, 15), 2), 0.0, False])
    total = sum(b[1] for b in net.buses)
    for b, c in [(1, 12.0), (idx(rows - 1, cols - 1), 45.0), (idx(0, cols - 1), 25.0), (idx(rows - 1, 0), 60.0)]:
        net.gens.append((b, c, 0.0, round(total * 0.6, 1)))
    rate(net, rng, 0.4, 1.5)
    return net


def braess_chain(links):
    """Repeated Braess cells: cheap supply at bus 1, expensive units at the far end."""
    net = Net()
    n = 2 * links + 1
    for i in range(1, n + 1):
        net.buses.append((i, 30.0 if i % 2 == 1 and i > 1 else 5.0 if i > 1 else 0.0, i == 1))
    for k in range(links):
        a, m, b = 2 * k + 1, 2 * k + 2, 2 * k + 3
        net.lines.append([len(net.lines) + 1, a, m, 10.0, 400.0, False])
        net.lines.append([len(net.lines) + 1, m, b, 10.0, 400.0, False])
        net.lines.append([len(net.lines) + 1, a, b, 10.0 + 2 * k, 25.0 + 5 * k, True])
    net.gens.append((1, 10.0, 0.0, 600.0))
    for k in range(links):
        net.gens.append((2 * k + 3, 30.0 + 5 * k, 0.0, 80.0))
    return net


def write_matpower_annotation(path, switchable, slack):
    lines = [f"slack {slack}"] + [f"switchable {r}" for r in switchable]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Brute-force check (scipy), independent of the C++ code.


def opf(net, demand, status):
    pos = {b[0]: i for i, b in enumerate(net.buses)}
    ng, nb, nl = len(net.gens), len(net.buses), len(net.lines)
    nv = ng + nb + nl
    c = np.zeros(nv)
    bounds = []
    for g, (_, cost, lo, hi) in enumerate(net.gens):
        c[g] = cost
        bounds.append((lo, hi))
    for i in range(nb):
        bounds.append((0, 0) if net.buses[i][2] else (None, None))
    aeq, beq = [], []
    for i in range(nb):
        row = np.zeros(nv)
        for g, gen in enumerate(net.gens):
            if pos[gen[0]] == i:
                row[g] = 1
        for l, (_, f, t, _, _, _) in enumerate(net.lines):
            if pos[f] == i:
                row[ng + nb + l] -= 1
            if pos[t] == i:
                row[ng + nb + l] += 1
        aeq.append(row)
        beq.append(demand[i])
    k = 0
    for l, (_, f, t, b, cap, sw) in enumerate(net.lines):
        on = True
        if sw:
            on = status[k]
            k += 1
        bounds.append((-cap, cap) if on else (0, 0))
        if on:
            row = np.zeros(nv)
            row[ng + nb + l] = 1
            row[ng + pos[f]] = -net.base * b
            row[ng + pos[t]] = net.base * b
            aeq.append(row)
            beq.append(0.0)
    res = linprog(c, A_eq=np.array(aeq), b_eq=beq, bounds=bounds, method="highs")
    return res.fun if res.status == 0 else None


def check(name, net, samples=10, seed=0):
    rng = random.Random(seed)
    s = sum(1 for l in net.lines if l[5])
    savings, tops, infeasible = [], set(), 0
    for _ in range(samples):
        d = [b[1] * rng.uniform(0.9, 1.1) for b in net.buses]
        costs = {st: opf(net, d, st) for st in itertools.product((0, 1), repeat=s)}
        infeasible += sum(v is None for v in costs.values())
        feasible = [(v, st) for st, v in costs.items() if v is not None]
        if not feasible:
            print(f"{name}: instance infeasible under every topology")
            continue
        best = min(feasible)
        tops.add(best[1])
        allon = costs[(1,) * s]
        if allon is not None:
            savings.append(100 * (allon - best[0]) / allon)
    print(f"{name}: |S|={s} mean savings {np.mean(savings) if savings else float('nan'):.2f}% "
          f"all-on feasible {len(savings)}/{samples} distinct optima {len(tops)} "
          f"infeasible topologies {infeasible}/{samples * 2 ** s}")


def fixtures():
    return {
        "braess_chain.net": ("Braess cells in series; each chord congests.", braess_chain(6)),
        "mesh_a.net": ("Random mesh, 10 buses, 8 switchable chords.", random_mesh(11, 10, 8)),
        "mesh_b.net": ("Random mesh, 14 buses, 12 switchable chords.", random_mesh(23, 14, 12)),
        "grid_3x4.net": ("3x4 grid; first row and all verticals fixed.", grid(5, 3, 4)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    for name, (header, net) in fixtures().items():
        (DATA / name).write_text(net.text(header))
        if args.check and sum(1 for l in net.lines if l[5]) <= 12:
            check(name, net)


if __name__ == "__main__":
    main()
