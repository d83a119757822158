"""Command-line entry point: ``hetdapac {run,audit,metrics-table,serve,client}``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from .audit import (AuditReport, audit_attribute_privacy, audit_correctness, audit_database_secrecy,
                    audit_query_message_independence)
from .config import RunConfig, load_config
from .errors import HetDapacError
from .metrics import CSV_COLUMNS, closed_form, csv_row, measure, parse_lambda
from .model import SystemConfig
from .schemes import dapac, get
from .simulate import make_store, run_scheme

log = logging.getLogger("hetdapac")

SCHEME_CHOICES = ("dapac", "hetdapac", "d3", "timeshare")


def _parse_addresses(text: str) -> dict[int, tuple[str, int]]:
    out = {}
    for item in text.split(","):
        sid, _, addr = item.partition("=")
        host, _, port = addr.rpartition(":")
        if not sid or not port:
            raise HetDapacError(f"bad address {item!r}; use id=host:port")
        out[int(sid)] = (host or "127.0.0.1", int(port))
    return out


def _resolve(args) -> tuple[RunConfig, SystemConfig, str, tuple[int, ...], Fraction | None]:
    run = load_config(args.config)
    cfg = run.system
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "L", None) is not None:
        cfg = cfg.replace(L=args.L)
    scheme = getattr(args, "scheme", None) or run.scheme
    if scheme is None:
        raise HetDapacError("no scheme given on the command line or in the config")
    if getattr(args, "vstar", None):
        vstar = cfg.parse_vector(args.vstar)
    elif run.user is not None:
        vstar = run.vstar
    else:
        vstar = (0,) * cfg.N
    lam = parse_lambda(getattr(args, "lam", None)) if getattr(args, "lam", None) else run.lam
    return run, cfg, scheme, vstar, lam


def _write_csv(rows: list[dict], path: Path | None):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if path is not None:
        path.write_text(buf.getvalue())
    return buf.getvalue()


def _secrecy_cfg(cfg: SystemConfig, scheme: str) -> SystemConfig:
    parts = {"dapac": dapac.subpackets(cfg.D), "hetdapac": cfg.D, "d3": 6}[scheme]
    return cfg.replace(q=2, L=parts)


def scheme_audits(scheme: str, cfg: SystemConfig, vstar, kinds=("correctness", "privacy", "secrecy", "independence"),
                  lam=None, seeds=range(100), method: str = "factored", q: int = 2) -> list[AuditReport]:
    """The audit battery for one scheme; time-sharing audits each component."""
    reports = []
    if "independence" in kinds:
        t0 = time.perf_counter()
        ok = audit_query_message_independence(scheme, cfg, vstar, lam=lam)
        reports.append(AuditReport("query_message_independence", scheme, "PASS" if ok else "FAIL",
                                   wall_time=time.perf_counter() - t0))
    components = ("dapac", "hetdapac") if scheme == "timeshare" else (scheme,)
    for s in components:
        if s == "dapac" and cfg.D < 2:
            continue
        if "correctness" in kinds:
            reports.append(audit_correctness(s, cfg.replace(L=_secrecy_cfg(cfg, s).L), seeds))
        if "privacy" in kinds:
            last = cfg.D if s == "dapac" else cfg.D + 1
            target = None if s == "d3" else Fraction(0)
            for server in range(1, last + 1):
                reports.append(audit_attribute_privacy(s, cfg.replace(q=q), server, vstar, method=method,
                                                       target=target))
        if "secrecy" in kinds:
            reports.append(audit_database_secrecy(s, _secrecy_cfg(cfg, s).replace(q=q), vstar))
    return reports


def _emit_reports(reports: list[AuditReport], out: Path | None):
    text = "\n".join(r.to_text() for r in reports)
    if out is not None:
        (out / "audit_report.txt").write_text(text)
    for r in reports:
        line = f"{r.verdict:8} {r.scheme:9} {r.audit}"
        if r.distance is not None:
            line += f" distance={r.distance}"
        print(line)


def cmd_run(args) -> int:
    run, cfg, scheme, vstar, lam = _resolve(args)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    if args.service:
        from .netsim.service import service_run
        t, _ = service_run(cfg, scheme, vstar)
    else:
        t, _ = run_scheme(cfg, scheme, vstar, lam=lam)
    expected = make_store(cfg)[vstar]
    matched = t.decoded == expected
    m = measure(t)
    rows = [csv_row(m, cfg)]
    if out:
        from .netsim.dump import dump
        dump(t, cfg, out / "transcript.json")
    sys.stdout.write(_write_csv(rows, out / "metrics.csv" if out else None))
    down = t.downloads()
    print(f"designated {cfg.label(vstar)}: decoded {'OK' if matched else 'MISMATCH'}; "
          f"downloads {sum(down.values())} symbols {dict(down)}")
    ok = matched
    if args.audit:
        reports = scheme_audits(scheme, cfg, vstar, lam=lam)
        _emit_reports(reports, out)
        ok = ok and all(r.passed for r in reports)
    return 0 if ok else 1


def cmd_audit(args) -> int:
    run, cfg, scheme, vstar, lam = _resolve(args)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    kinds = ("correctness", "privacy", "secrecy", "independence") if args.kind == "all" else (args.kind,)
    reports = scheme_audits(scheme, cfg, vstar, kinds, lam=lam, seeds=range(args.seeds),
                            method=args.method, q=args.q)
    _emit_reports(reports, out)
    return 0 if all(r.passed for r in reports) else 1


def _min_length(scheme: str, D: int, lam: Fraction | None) -> int:
    if scheme == "timeshare":
        L = 1
        while True:
            first = lam * L
            if first.denominator == 1 and (first == 0 or first % dapac.subpackets(D) == 0) \
                    and (L - first) % D == 0:
                return L
            L += 1
    return {"dapac": dapac.subpackets(D), "hetdapac": D, "d3": 6}[scheme]


def metrics_rows(Ks, Ds, lams) -> tuple[list[dict], dict]:
    """Measured metrics for every scheme at each ``(K, D)``; also the points per pair for plotting."""
    rows, points = [], {}
    for K in Ks:
        for D in Ds:
            cfg0 = SystemConfig(D + 1, D, K, q=257, seed=0)
            plan = [("hetdapac", None)] + ([("d3", None)] if D == 3 else [])
            if D >= 2:
                plan += [("dapac", None)] + [("timeshare", lam) for lam in lams]
            for scheme, lam in plan:
                L = _min_length(scheme, D, lam)
                cfg = cfg0.replace(L=L)
                t, _ = run_scheme(cfg, scheme, (0,) * cfg.N, lam=lam)
                if t.decoded != make_store(cfg)[(0,) * cfg.N]:
                    raise HetDapacError(f"{scheme} failed to decode at K={K}, D={D}")
                m = measure(t)
                rows.append(csv_row(m, cfg))
                points.setdefault((K, D), []).append(m)
    return rows, points


def cmd_metrics_table(args) -> int:
    lams = [parse_lambda(x) for x in args.lambdas]
    rows, points = metrics_rows(args.K, args.D, lams)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    sys.stdout.write(_write_csv(rows, out / "metrics.csv" if out else None))
    if out and not args.no_plot:
        from .plotting import tradeoff_figure
        for (K, D), pts in points.items():
            if D >= 2:
                tradeoff_figure(K, D, pts, out / f"tradeoff_K{K}_D{D}.png")
    # closed forms are the reference every measured row must hit
    bad = 0
    for r in rows:
        if r["scheme"] == "dapac":
            continue
        lam = parse_lambda(r["lambda"]) if r["lambda"] else None
        cf = closed_form(r["scheme"], r["K"], r["D"], lam)
        if Fraction(r["rate_num"], r["rate_den"]) != cf.rate:
            bad += 1
            print(f"rate mismatch: {r}", file=sys.stderr)
    return 0 if not bad else 1


def cmd_serve(args) -> int:
    from .netsim.service import Cluster, ProtocolServer, ServerState, pool_seed_from_env
    run, cfg, scheme, _, _ = _resolve(args)
    pool_seed = pool_seed_from_env()
    if args.role == "all":
        ports = [args.port + i for i in range(cfg.D + 1)] if args.port else None
        cluster = Cluster(cfg, scheme, run.registry, pool_seed, args.host, ports)
        for n, addr in cluster.addresses.items():
            print(f"server {n} listening on {addr[0]}:{addr[1]}", flush=True)
        cluster.start()
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            cluster.stop()
        return 0
    n = int(args.role)
    peers = _parse_addresses(args.peers) if args.peers else {}
    srv = ProtocolServer((args.host, args.port), ServerState(cfg, n, scheme, run.registry, pool_seed, peers))
    print(f"server {n} listening on {srv.address[0]}:{srv.address[1]}", flush=True)
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        srv.server_close()
    return 0


def cmd_client(args) -> int:
    from .netsim.service import Client
    run, cfg, scheme, vstar, _ = _resolve(args)
    user = args.user or run.user or "user"
    client = Client(cfg, _parse_addresses(args.servers))
    t = client.retrieve(scheme, user, vstar, cfg.seed)
    out = Path(args.out) if args.out else None
    if out:
        from .netsim.dump import dump
        out.mkdir(parents=True, exist_ok=True)
        dump(t, cfg, out / "transcript.json")
    sys.stdout.write(_write_csv([csv_row(measure(t), cfg)], out / "metrics.csv" if out else None))
    matched = t.decoded == make_store(cfg)[vstar]
    print(f"designated {cfg.label(vstar)}: decoded {'OK' if matched else 'MISMATCH'}")
    return 0 if matched else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetdapac", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scheme=True):
        sp.add_argument("--config", required=True, help="experiment config (INI)")
        if scheme:
            sp.add_argument("--scheme", choices=SCHEME_CHOICES)
        sp.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (overrides the config)")
        sp.add_argument("--L", type=int, help="message length in symbols (overrides the config)")
        sp.add_argument("--vstar", help="attribute labels, e.g. a2y or a,2,y (default: the config's user)")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("run", help="run one retrieval and write transcript and metrics")
    common(sp)
    sp.add_argument("--lambda", dest="lam", help="time-sharing fraction a/b")
    sp.add_argument("--audit", action="store_true", help="also run the audit battery")
    sp.add_argument("--service", action="store_true", help="run over localhost sockets")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("audit", help="run exhaustive audits")
    common(sp)
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--kind", default="all", choices=("all", "correctness", "privacy", "secrecy", "independence"))
    sp.add_argument("--q", type=int, default=2, help="field size for enumeration audits")
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--method", default="factored", choices=("factored", "joint"))
    sp.set_defaults(fn=cmd_audit)

    sp = sub.add_parser("metrics-table", help="measured metrics CSV and trade-off figures")
    sp.add_argument("--K", type=int, nargs="+", default=[2, 3])
    sp.add_argument("--D", type=int, nargs="+", default=[2, 3])
    sp.add_argument("--lambdas", nargs="+", default=["1/4", "1/2", "3/4"])
    sp.add_argument("--out")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(fn=cmd_metrics_table)

    sp = sub.add_parser("serve", help="run protocol servers (pool seed from $HETDAPAC_POOL_SEED)")
    sp.add_argument("--config", required=True)
    sp.add_argument("--scheme", choices=SCHEME_CHOICES[:3])
    sp.add_argument("--role", default="all", help="server id, or 'all' for every server in one process")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=0)
    sp.add_argument("--peers", help="central server only: dedicated addresses as 1=host:port,2=host:port")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("client", help="retrieve from running servers")
    common(sp)
    sp.add_argument("--servers", required=True, help="1=host:port,...,D+1=host:port")
    sp.add_argument("--user")
    sp.set_defaults(fn=cmd_client)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except HetDapacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
