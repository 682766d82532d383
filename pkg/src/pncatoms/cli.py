"""Command line entry point: ``pncatoms <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import mac
from .atoms import Scheme, catalog, get_atom
from .experiments import ExperimentConfig, Traffic, radius_sweep, run
from .identification import build_matrix, identify
from .patterns import SearchInconclusive, find_pattern, min_slots, simulate, verify
from .scheduler import expand, schedule
from .topology import DEFAULT_ALPHA, LocalNetwork, generate, potential_flows

HEAVY_VOLUME = 1000


def _dump(obj, out=None) -> None:
    (out or sys.stdout).write(json.dumps(obj, indent=2) + "\n")


def cmd_catalog(args) -> int:
    _dump([a.to_dict() for a in catalog()])
    return 0


def cmd_verify_atoms(args) -> int:
    ok = True
    for atom in catalog():
        res = {s: verify(atom, s) for s in (Scheme.PNC, Scheme.SNC)}
        ok &= all(res.values())
        print(f"{atom.id:>4}  " + "  ".join(f"{s.value}={'pass' if v else 'FAIL'}"
                                            for s, v in res.items()))
    return 0 if ok else 1


def cmd_min_slots(args) -> int:
    atom = get_atom(args.atom)
    scheme = Scheme(args.scheme)
    ci, flows = atom.ci_for(scheme), atom.flow_set
    out = {"atom": atom.id, "scheme": scheme.value, "max_slots": args.max_slots,
           "allow_peripheral_downlink": args.allow_peripheral_downlink}
    try:
        k = min_slots(ci, flows, args.max_slots, budget=args.budget,
                      allow_peripheral_downlink=args.allow_peripheral_downlink)
    except SearchInconclusive as exc:
        _dump({**out, "status": "inconclusive", "detail": str(exc)})
        return 2
    out.update(status="found" if k is not None else "absent", min_slots=k)
    if k:
        pattern = find_pattern(ci, flows, k, budget=args.budget,
                               allow_peripheral_downlink=args.allow_peripheral_downlink)
        names = flows.packet_names
        out["pattern"] = pattern.to_dict(names)
        out["report"] = simulate(pattern, ci, flows).to_dict(names)
    _dump(out)
    return 0


def _load_network(args) -> LocalNetwork:
    if args.network:
        return LocalNetwork.from_json(Path(args.network).read_text())
    return generate(args.nodes, args.inner, 1.0, args.seed, alpha=args.alpha)


def cmd_identify(args) -> int:
    net = _load_network(args)
    flows = potential_flows(net)
    found = identify(net, flows, args.classes.split(",") if args.classes else None, args.scheme)
    matrix = build_matrix(found, flows)
    out = {
        "network": net.to_dict(),
        "flows": [list(f) for f in flows],
        "counts": {cid: len(v) for cid, v in found.items()},
        "dedup": "one instance per template-automorphism orbit",
        "instances": [inst.to_dict() for inst in matrix.instances],
        "matrix": {"rows": matrix.shape[0], "cols": matrix.shape[1]},
    }
    if args.dump_matrix:
        out["matrix"]["nonzeros"] = np.argwhere(matrix.D).tolist()
    if args.save_network:
        Path(args.save_network).write_text(net.to_json())
    _dump(out)
    return 0


def _read_demands(path: str, flows) -> np.ndarray:
    """Either a list with one count per potential flow or a list of
    ``[source, destination, count]`` triples."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["demands"]
    if data and isinstance(data[0], list):
        index = {f: i for i, f in enumerate(flows)}
        c = np.zeros(len(flows), dtype=np.int64)
        for s, d, n in data:
            if (s, d) not in index:
                raise SystemExit(f"({s}, {d}) is not a potential flow of this network")
            c[index[(s, d)]] += n
        return c
    return np.asarray(data, dtype=np.int64)


def cmd_schedule(args) -> int:
    net = LocalNetwork.from_json(Path(args.network).read_text())
    flows = potential_flows(net)
    c = _read_demands(args.demands, flows)
    sched = schedule(net, c, args.scheme, solver=args.solver, greedy=args.greedy, flows=flows)
    roster = expand(sched)
    out = sched.to_dict()
    out["roster"] = [
        {"time": s.time,
         "transmit": {str(k): [str(p) for p in v] for k, v in s.transmit.items()},
         "receive": {str(k): [str(p) for p in v] for k, v in s.receive.items()}}
        for s in roster.slots
    ]
    out["packets"] = [
        {"packet": str(a.packet), "source": a.source, "start_time": a.start_time,
         "class": a.class_id, "role": a.role}
        for a in roster.assignments
    ]
    _dump(out)
    return 0


def cmd_mac(args) -> int:
    text = sys.stdin.read()
    try:
        if args.action == "encode":
            frame = mac.from_dict(args.frame, json.loads(text))
            sys.stdout.write(mac.encode(frame).hex() + "\n")
            return 0
        raw = bytes.fromhex("".join(text.split()))
        if args.frame == "request":
            frame = mac.decode_request(raw, args.nodes)
        elif args.frame == "demand":
            frame = mac.decode_demand(raw, args.window)
        else:
            if args.nodes is None and args.window is None:
                raise SystemExit("decoding an assignment needs --nodes or --window")
            frame = mac.decode_assignment(raw, args.nodes, args.window)
    except mac.FrameError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _dump(mac.to_dict(frame))
    return 0


def cmd_experiment(args) -> int:
    traffic = Traffic.parse(args.traffic)
    volume = traffic.amount * (args.nodes if traffic.mode == "saturated" else 1)
    if volume >= HEAVY_VOLUME and not args.heavy:
        raise SystemExit(f"traffic volume {volume} needs --heavy")
    config = ExperimentConfig(
        n_r=args.nodes, traffic=traffic, schemes=tuple(s.strip() for s in args.schemes.split(",")),
        n_networks=args.networks, n_assignments=args.assignments, r_inner=args.inner,
        seed=args.seed, solver=args.solver, alpha=args.alpha)
    out = Path(args.out)
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".json")
    if args.sweep_inner:
        radii = [float(r) for r in args.radii.split(",")]
        sweep = radius_sweep(config, radii, workers=args.workers)
        with open(out, "w") as fh:
            fh.write("r_inner,network_id,assignment_id,scheme,slots\n")
            for r, res in sweep.results.items():
                for row in res.rows:
                    fh.write(f"{r},{row['network_id']},{row['assignment_id']},"
                             f"{row['scheme']},{row['slots']}\n")
        summary = {"means": {str(r): m for r, m in sweep.means.items()}, "spread": sweep.spread}
        summary_path.write_text(json.dumps(summary, indent=2))
        _dump(summary)
        return 0
    result = run(config, workers=args.workers)
    result.to_csv(out)
    result.write_summary(summary_path)
    for name, m in result.metrics().items():
        print(f"{name:>14}  mean {m.mean_ts:8.2f}  rsd {m.rsd:6.3f}  "
              f"D {m.mean_degradation:6.2f}%  gamma {m.tail_gamma:5.2f}")
    if result.failures:
        print(f"{len(result.failures)} trial(s) aborted, see {summary_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pncatoms", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="dump the nine atom classes as JSON").set_defaults(fn=cmd_catalog)
    sub.add_parser("verify-atoms", help="check every PNC and SNC pattern").set_defaults(
        fn=cmd_verify_atoms)

    q = sub.add_parser("min-slots", help="search for the shortest decoding pattern")
    q.add_argument("--atom", required=True)
    q.add_argument("--scheme", choices=("pnc", "snc"), default="pnc")
    q.add_argument("--allow-peripheral-downlink", action="store_true")
    q.add_argument("--max-slots", type=int, default=8)
    q.add_argument("--budget", type=int, default=2_000_000)
    q.set_defaults(fn=cmd_min_slots)

    q = sub.add_parser("identify", help="find atom instances in a network")
    q.add_argument("--network", help="network JSON; overrides the generator options")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--nodes", type=int, default=30)
    q.add_argument("--inner", type=float, default=0.5)
    q.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    q.add_argument("--classes", help="comma separated class ids, default all")
    q.add_argument("--scheme", choices=("pnc", "snc"), default="pnc")
    q.add_argument("--dump-matrix", action="store_true", help="include (row, col) nonzeros")
    q.add_argument("--save-network", help="write the network JSON here")
    q.set_defaults(fn=cmd_identify)

    q = sub.add_parser("schedule", help="schedule a demand on a network")
    q.add_argument("--network", required=True)
    q.add_argument("--demands", required=True)
    q.add_argument("--scheme", default="pnc9")
    q.add_argument("--solver", choices=("simplex", "highs", "auto"), default="simplex")
    q.add_argument("--greedy", action="store_true")
    q.set_defaults(fn=cmd_schedule)

    q = sub.add_parser("mac", help="encode or decode coordination frames as hex")
    q.add_argument("action", choices=("encode", "decode"))
    q.add_argument("--frame", required=True, choices=("request", "demand", "assignment"))
    q.add_argument("--nodes", type=int, help="expected N_R when decoding")
    q.add_argument("--window", type=int, help="expected W when decoding")
    q.set_defaults(fn=cmd_mac)

    q = sub.add_parser("experiment", help="Monte Carlo scheme comparison")
    q.add_argument("--nodes", type=int, default=30)
    q.add_argument("--traffic", default="fixed:100")
    q.add_argument("--schemes", default="pnc9,snc9,pnc-i,nonnc")
    q.add_argument("--networks", type=int, default=10)
    q.add_argument("--assignments", type=int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--inner", type=float, default=0.5)
    q.add_argument("--alpha", type=float)
    q.add_argument("--solver", choices=("simplex", "highs", "auto"), default="auto")
    q.add_argument("--sweep-inner", action="store_true")
    q.add_argument("--radii", default="0.1,0.3,0.5,0.7,0.9")
    q.add_argument("--heavy", action="store_true", help=f"allow volumes of {HEAVY_VOLUME}+ packets")
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--out", required=True)
    q.add_argument("--summary", help="summary JSON path, default next to --out")
    q.set_defaults(fn=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
