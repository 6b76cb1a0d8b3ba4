"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import io
import random
import sys
import time
from pathlib import Path

from scipy import special

from conftest import ACCEPTANCE_LINES
from helpers import dual_acceptance, mutable_fields, mutated_run
from pkmlab.adversary import RESISTANT, VULNERABLE, KnowledgeBase, attack_matrix, run_attack
from pkmlab.cli import main
from pkmlab.cpn import MonitorLog, explore, liveness, simulate, t_quantile, timed_stats
from pkmlab.crypto import DESK_GROUP, derive_ak, gen_dh_keypair, modexp
from pkmlab.nets import CATALOG
from pkmlab.protocols import make_world, run_protocol

GOLDEN = Path(__file__).parent / "golden"


def report(n, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_dh_agreement():
    g = DESK_GROUP
    t0 = time.perf_counter()
    agree = sum(modexp(modexp(g.g, b, g.q), a, g.q) == modexp(modexp(g.g, a, g.q), b, g.q)
                for a in range(1, 22) for b in range(1, 22))
    # the key-pair API draws exponents from [2, q-2]; check it over that range too
    pairs = [gen_dh_keypair(g, x=x) for x in range(2, 22)]
    api_ok = all(derive_ak(u, v.y_public, g) == derive_ak(v, u.y_public, g)
                 for u in pairs for v in pairs)
    elapsed = time.perf_counter() - t0
    ms, bs = gen_dh_keypair(g, x=6), gen_dh_keypair(g, x=15)
    ak = derive_ak(ms, bs.y_public, g).value
    ok = agree == 441 and api_ok and elapsed < 1 and ak == 2 == derive_ak(bs, ms.y_public, g).value \
        and ak == modexp(modexp(5, 15, 23), 6, 23)
    report(1, "DH agreement over q=23,g=5 and fixture AK", ok,
           f"{agree}/441 agree in {elapsed:.3f}s, AK={ak}")


def test_criterion_2_statespace_report():
    out = io.StringIO()
    code = main(["cpn", "statespace", "--net", "proposed"], out)
    text = out.getvalue()
    ok = code == 0 and text == (GOLDEN / "statespace_proposed.txt").read_text()
    report(2, "state-space report of the proposed net is byte-exact", ok,
           "Nodes 11, Arcs 10, SCC 11/10, Full, dead [11]")


def _log(pieces):
    samples, t = [], 0.0
    for i, (v, d) in enumerate(pieces):
        samples.append((i, t, float(v)))
        t += d
    return MonitorLog("m", samples, 50.0)


def test_criterion_3_timed_statistics():
    r1 = timed_stats(_log([(1, 50)]), count=4)
    r2 = timed_stats(_log([(1, 10), (0, 40)]), count=6)
    r3 = timed_stats(_log([(2, 5), (1, 25), (0, 20)]), count=4)
    want = [(r2, (0.2, 8.0, 0.163265, 0.404061, 0.332389, 0.424105, 0.665108)),
            (r3, (0.7, 20.5, 0.418367, 0.646813, 0.760976, 1.029080, 1.889018))]
    worst = 0.0
    for s, w in want:
        got = (s.avg, s.ssd, s.variance, s.std, s.half_length_90, s.half_length_95,
               s.half_length_99)
        worst = max(worst, max(abs(a - b) for a, b in zip(got, w)))
    zero = (r1.ssd, r1.variance, r1.std, r1.half_length_90, r1.half_length_95,
            r1.half_length_99) == (0, 0, 0, 0, 0, 0) and r1.avg == 1.0
    report(3, "timed statistics rows", worst <= 1e-4 and zero,
           f"max abs error {worst:.2e}, row 1 spread exactly zero: {zero}")


def test_criterion_4_simulation_footer():
    res = simulate(CATALOG["proposed"].net, rng=0)
    ok = res.steps == 10 and res.model_time == 50.0 and \
        all(t.delay == 5 for t in CATALOG["proposed"].net.transitions)
    report(4, "proposed net simulation footer", ok,
           f"steps {res.steps}, model time {res.model_time}")


def test_criterion_5_catalog_structure():
    problems = []
    for name, entry in CATALOG.items():
        e, net = entry.expected, entry.net
        g = explore(net)
        live = liveness(net, g)
        res = simulate(net, rng=entry.canonical_seed)
        got = (len(net.places), len(net.transitions), len(g.nodes), len(g.arcs), res.steps)
        want = (e.places, e.transitions, e.ss_nodes, e.ss_arcs, e.steps)
        if got != want:
            problems.append(f"{name}: {got} != {want}")
        need = {"proposed": lambda k: k == 1, "pkmv2": lambda k: k >= 1, "eap": lambda k: k == 2}
        if not need[name](len(live.dead_markings)):
            problems.append(f"{name}: {len(live.dead_markings)} dead markings")
    report(5, "catalog net structure", not problems, "; ".join(problems) or
           "10/5, 12/5, 12/9; 11/10, 10/9, 19/22; steps 10, 7, 13; dead 1, 2, 2")


def test_criterion_6_attack_matrix():
    m = attack_matrix(0)
    intercept = all(m.cell(p, "interception").rating == RESISTANT
                    for p in ("pkmv2", "eap", "dh-proposed"))
    active = all(m.cell(p, a).rating == RESISTANT
                 for p in ("eap", "dh-proposed") for a in ("mitm", "replay"))
    bare = sum(run_attack("dh-bare", "mitm", s).broken for s in range(100))
    replay = run_attack("pkmv1", "replay", 0)
    ok = intercept and active and bare == 100 and replay.broken and replay.rating == VULNERABLE
    report(6, "attack matrix", ok,
           f"interception resistant: {intercept}, eap/dh-proposed active resistant: {active}, "
           f"dh-bare MITM {bare}/100, pkmv1 replay broken: {replay.broken}")


def _mutation_sweep(world, protocol, n=1000):
    rng = random.Random(f"mutation/{protocol}")
    cache = {}
    done = dual = 0
    while done < n:
        seed = rng.randrange(200)
        if seed not in cache:
            cache[seed] = mutable_fields(run_protocol(protocol, world, seed).transcript, protocol)
        step, fname = rng.choice(cache[seed])
        out = mutated_run(protocol, world, seed, step, fname, rng)
        if out is None:
            continue
        done += 1
        dual += dual_acceptance(out[0])
    return dual


def _oracle_quantile(p, df):
    def cdf(t):
        x = df / (df + t * t)
        return 1 - 0.5 * special.betainc(df / 2, 0.5, x)
    lo, hi = 0.0, 1e6
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if cdf(mid) < p else (lo, mid)
    return (lo + hi) / 2


def test_criterion_7_property_suites():
    world = make_world(0)
    dual = {p: _mutation_sweep(world, p) for p in ("pkmv2", "eap", "dh-proposed")}
    mutation_ok = not any(dual.values())

    # explore vs naive BFS and closure laws are covered in depth by their own modules;
    # here a fixed sample keeps the criterion self-contained
    from test_cpn_engine import _build, _oracle
    rng = random.Random(7)
    oracle_ok, compared = True, 0
    for _ in range(60):
        places = {p: [rng.choice("ab") for _ in range(rng.randrange(3))] for p in ("P0", "P1", "P2")}
        places["P0"] = places["P0"] or ["a"]
        ts = []
        for i in range(rng.randrange(1, 4)):
            ins = [(rng.choice(["P0", "P1", "P2"]), rng.choice("ab")) for _ in range(rng.randrange(1, 3))]
            delay = rng.choice([0, 5])
            cap = len(ins) if delay == 0 else len(ins) - 1
            outs = [(rng.choice(["P0", "P1", "P2"]), rng.choice("ab")) for _ in range(rng.randint(0, cap))]
            ts.append((f"T{i}", delay, ins, outs))
        want = _oracle(places, ts)
        if want is None:
            continue
        g = explore(_build(places, ts))
        compared += 1
        oracle_ok &= (len(g.nodes), len(g.arcs)) == want[:2]

    from pkmlab.adversary import Atom, Hash, PkEnc, pair, priv
    closure_ok = True
    atoms = [Atom(i) for i in range(4)] + [priv("k")]
    for _ in range(200):
        pool = list(atoms)
        for _ in range(5):
            a, b = rng.choice(pool), rng.choice(pool)
            pool.append(rng.choice([pair(a, b), Hash(a), PkEnc(rng.choice("kz"), a)]))
        small = KnowledgeBase(frozenset(rng.sample(pool, 3)))
        big = KnowledgeBase(small.terms | frozenset(rng.sample(pool, 3)))
        c = small.closure()
        closure_ok &= c.closure() == c and c.terms <= big.closure().terms

    worst = max(abs(t_quantile(p, df) - _oracle_quantile(p, df))
                for df in range(1, 31) for p in (0.55, 0.9, 0.95, 0.975, 0.995))
    ok = mutation_ok and oracle_ok and closure_ok and worst <= 1e-4
    report(7, "property suites", ok,
           f"dual acceptances after 1000 mutations each: {dual}; explore==oracle on "
           f"{compared} nets: {oracle_ok}; closure laws: {closure_ok}; "
           f"t-quantile max error {worst:.1e}")


if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).parent))
    failures = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
