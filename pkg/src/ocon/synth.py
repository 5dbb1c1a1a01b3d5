"""Synthetic /hVd/ corpus with plausible vowel formants.

Demos and desk-scale tests need measurement files with the real corpus
shape: 12 vowels, four speaker groups, F0 plus F1..F3 tracks, occasional
zeroed cells from upstream extraction failures.  Values are drawn around
published adult-male vowel formant averages, scaled per speaker group, with
per-speaker and per-utterance variation.  This is stand-in data for
exercising the pipeline, not a substitute for the real measurements.
"""

import numpy as np

from .dataset import ARPABET_CODES, FEATURE_KEYS, FeatureRecord, PhonemeLabel, SpeakerGroup

# Steady-state (F1, F2, F3) means in Hz for adult male speakers.
_MALE_FORMANTS = {
    "ae": (588, 1952, 2601), "ah": (768, 1333, 2522), "aw": (652, 997, 2538),
    "eh": (580, 1799, 2605), "er": (474, 1379, 1710), "ei": (476, 2089, 2691),
    "ih": (427, 2034, 2684), "iy": (342, 2322, 3000), "oa": (497, 910, 2459),
    "oo": (469, 1122, 2434), "uh": (623, 1200, 2550), "uw": (378, 997, 2343),
}

# F2 drift per unit time for the diphthongized vowels, as a fraction of SS.
_F2_SLOPE = {"ei": 0.18, "oa": -0.14, "aw": -0.08, "uw": -0.05}

_GROUP_SCALE = {SpeakerGroup.MAN: 1.00, SpeakerGroup.WOMAN: 1.15,
                SpeakerGroup.BOY: 1.22, SpeakerGroup.GIRL: 1.28}
_GROUP_F0 = {SpeakerGroup.MAN: 131.0, SpeakerGroup.WOMAN: 220.0,
             SpeakerGroup.BOY: 237.0, SpeakerGroup.GIRL: 242.0}

_TRACK_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


def _utterance_tracks(rng, code, group_scale, speaker_scale):
    """(ss_f123, tracks[8][3]) for one utterance, in Hz."""
    base = np.array(_MALE_FORMANTS[code], dtype=np.float64)
    ss = base * group_scale * speaker_scale * rng.lognormal(0.0, 0.05, size=3)
    slope = np.array([0.0, _F2_SLOPE.get(code, 0.0), 0.0])
    curve = rng.normal(0.0, 0.015, size=3)
    tracks = []
    for frac in _TRACK_FRACTIONS:
        dt = frac - 0.45
        drift = 1.0 + slope * dt + curve * dt * dt
        tracks.append(ss * drift * rng.lognormal(0.0, 0.015, size=3))
    return ss, tracks


def synth_records(seed=0, men=45, women=48, boys=27, girls=19, zero_rate=0.0):
    """Generate one utterance per (speaker, vowel); optionally zero out a
    random required field on a ``zero_rate`` fraction of rows."""
    rng = np.random.default_rng(seed)
    counts = {SpeakerGroup.MAN: men, SpeakerGroup.WOMAN: women,
              SpeakerGroup.BOY: boys, SpeakerGroup.GIRL: girls}
    records = []
    for group, n in counts.items():
        for speaker in range(1, n + 1):
            speaker_scale = rng.lognormal(0.0, 0.04)
            f0_scale = rng.lognormal(0.0, 0.08)
            for label_id, code in enumerate(ARPABET_CODES):
                ss, tracks = _utterance_tracks(rng, code, _GROUP_SCALE[group],
                                               speaker_scale)
                f0 = _GROUP_F0[group] * f0_scale * rng.lognormal(0.0, 0.04)
                values = {"f0_ss": f0}
                by_frac = dict(zip(_TRACK_FRACTIONS, tracks))
                for i, fmt in enumerate(("f1", "f2", "f3")):
                    values[f"{fmt}_ss"] = ss[i]
                    values[f"{fmt}_10"] = by_frac[0.1][i]
                    values[f"{fmt}_50"] = by_frac[0.5][i]
                    values[f"{fmt}_80"] = by_frac[0.8][i]
                if zero_rate > 0 and rng.random() < zero_rate:
                    values[str(rng.choice(FEATURE_KEYS))] = 0.0
                records.append(FeatureRecord(
                    group, speaker, PhonemeLabel.from_id(label_id),
                    **{k: float(v) for k, v in values.items()}))
    return records


def write_synth_dat(path, seed=0, zero_rate=0.0, **counts):
    """Write a synthetic measurement file in the public distribution's column
    layout (43 header lines, then filename + 29 integer columns)."""
    records = synth_records(seed=seed, zero_rate=zero_rate, **counts)
    records_to_dat(records, path, seed=seed + 1)
    return records


def records_to_dat(records, path, seed=0):
    """Serialize records into the public distribution's column layout."""
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("Synthetic /hVd/ measurement table\n")
        for _ in range(42):
            fh.write("#\n")
        for rec in records:
            duration = max(80, int(rng.normal(250, 40)))
            cols = [rec.filename, duration, int(round(rec.f0_ss))]
            for fmt in ("f1", "f2", "f3"):
                cols.append(int(round(rec.value(f"{fmt}_ss"))))
            # tracks at 10%..80%; fractions the generator does not model
            # explicitly are linear blends of the modeled ones
            known = {0.1: "10", 0.5: "50", 0.8: "80"}
            for frac in _TRACK_FRACTIONS:
                for fmt in ("f1", "f2", "f3"):
                    if frac in known:
                        v = rec.value(f"{fmt}_{known[frac]}")
                    elif frac < 0.5:
                        a, b = rec.value(f"{fmt}_10"), rec.value(f"{fmt}_50")
                        w = (frac - 0.1) / 0.4
                        v = 0.0 if a == 0 or b == 0 else (1 - w) * a + w * b
                    else:
                        a, b = rec.value(f"{fmt}_50"), rec.value(f"{fmt}_80")
                        w = (frac - 0.5) / 0.3
                        v = 0.0 if a == 0 or b == 0 else (1 - w) * a + w * b
                    cols.append(int(round(v)))
            fh.write(" ".join(str(c) for c in cols) + "\n")
    return records
