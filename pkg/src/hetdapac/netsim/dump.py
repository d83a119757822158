"""Transcript dumps: JSON text embedding the config, seeds and every frame in hex.

Layout::

    {
      "format": "hetdapac-transcript", "version": 1,
      "config": {"N": .., "D": .., "K": .., "q": .., "L": .., "seed": .., "alphabets": [[..], ..]},
      "scheme": "hetdapac", "lambda": null | "a/b",
      "vstar": [0, 1, 1], "vstar_label": "a2y", "user_seed": 1,
      "frames": [{"part": 0, "server": 1, "tag": "QUERY", "hex": "..."}, ...],
      "decoded_hex": "...",
      "transcript_hex": "..."
    }

``frames`` lists each query frame followed by its answer frame, in server
order, per sub-protocol part (a single part unless time-shared).
``transcript_hex`` is the binary transcript blob and is authoritative; the
loader checks the frames against it.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import DecodeError
from ..model import SystemConfig, Transcript
from . import codec

FORMAT = "hetdapac-transcript"


def _frames(t: Transcript) -> list[dict]:
    parts = t.parts or [t]
    out = []
    for i, p in enumerate(parts):
        for ex in p.exchanges:
            out.append({"part": i, "server": ex.server, "tag": "QUERY",
                        "hex": codec.encode_frame(codec.QUERY, codec.encode_query(ex.query, t.q)).hex()})
            out.append({"part": i, "server": ex.server, "tag": "ANSWER",
                        "hex": codec.encode_frame(codec.ANSWER, codec.encode_answer(ex.answer, t.q)).hex()})
    return out


def to_dict(t: Transcript, cfg: SystemConfig) -> dict:
    return {
        "format": FORMAT,
        "version": codec.VERSION,
        "config": {"N": cfg.N, "D": cfg.D, "K": cfg.K, "q": cfg.q, "L": cfg.L, "seed": cfg.seed,
                   "alphabets": [list(a) for a in cfg.alphabets]},
        "scheme": t.scheme,
        "lambda": None if t.lam is None else f"{t.lam[0]}/{t.lam[1]}",
        "vstar": list(t.vstar),
        "vstar_label": cfg.label(t.vstar),
        "user_seed": t.user_seed,
        "frames": _frames(t),
        "decoded_hex": b"".join(x.to_bytes(2, "big") for x in t.decoded).hex(),
        "transcript_hex": codec.encode_transcript(t).hex(),
    }


def dump(t: Transcript, cfg: SystemConfig, path: str | Path):
    Path(path).write_text(json.dumps(to_dict(t, cfg), indent=1) + "\n")


def from_dict(data: dict) -> tuple[SystemConfig, Transcript]:
    if data.get("format") != FORMAT:
        raise DecodeError("not a transcript dump")
    c = data["config"]
    cfg = SystemConfig(c["N"], c["D"], c["K"], c["q"], c["L"], tuple(tuple(a) for a in c["alphabets"]), c["seed"])
    t = codec.decode_transcript(bytes.fromhex(data["transcript_hex"]))
    if _frames(t) != data["frames"]:
        raise DecodeError("frame list does not match the embedded transcript")
    return cfg, t


def load(path: str | Path) -> tuple[SystemConfig, Transcript]:
    return from_dict(json.loads(Path(path).read_text()))
