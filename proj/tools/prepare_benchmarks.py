#!/usr/bin/env python3
# Copyright 2026 The sysid Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Convert the Silverbox and F-16 benchmark downloads into sysid dataset CSVs.

Writes <out>/silverbox/{train,valid,test}.csv and <out>/f16/{train,valid,test}.csv,
each with a .meta.json sidecar holding the sample rate and record boundaries.

Silverbox (SNLS80mV.csv, columns V1 = input, V2 = output, in volts):
  test   samples [0, 40000), the arrow-shaped signal
  train  the multisine section from sample 40650, first 80 %
  valid  the remaining 20 %

F-16 (BenchmarkData/*.csv, columns Force, Voltage, Acceleration1..3):
  train  F16Data_FullMSine_Level1/3/5 (one record per file)
  valid  F16Data_FullMSine_Level7
  test   F16Data_FullMSine_Level2/4/6
"""

import argparse
import csv
import json
import pathlib
import sys

SILVERBOX_RATE = 1e7 / 2**14
F16_RATE = 400.0


def read_columns(path, names):
    with open(path, newline="") as f:
        rows = csv.reader(f)
        header = [h.strip() for h in next(rows)]
        missing = [n for n in names if n not in header]
        if missing:
            sys.exit(f"{path}: missing columns {missing} (have {header})")
        idx = [header.index(n) for n in names]
        return [[float(r[i]) for i in idx] for r in rows if r]


def write_dataset(path, header, records, rate):
    path.parent.mkdir(parents=True, exist_ok=True)
    bounds = [0]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for rec in records:
            w.writerows(rec)
            bounds.append(bounds[-1] + len(rec))
    meta = path.with_suffix(".meta.json")
    meta.write_text(json.dumps({"sample_rate": rate, "segments": bounds}) + "\n")
    print(f"{path}: {len(records)} record(s), {bounds[-1]} samples")


def silverbox(src, out):
    rows = read_columns(src, ["V1", "V2"])
    test = rows[:40000]
    train_all = rows[40650:]
    cut = int(len(train_all) * 0.8)
    header = ["u1", "y1"]
    write_dataset(out / "train.csv", header, [train_all[:cut]], SILVERBOX_RATE)
    write_dataset(out / "valid.csv", header, [train_all[cut:]], SILVERBOX_RATE)
    write_dataset(out / "test.csv", header, [test], SILVERBOX_RATE)


def f16(src, out):
    names = ["Force", "Voltage", "Acceleration1", "Acceleration2", "Acceleration3"]
    level = lambda n: read_columns(src / f"F16Data_FullMSine_Level{n}.csv", names)
    header = ["u1", "u2", "y1", "y2", "y3"]
    write_dataset(out / "train.csv", header, [level(n) for n in (1, 3, 5)], F16_RATE)
    write_dataset(out / "valid.csv", header, [level(7)], F16_RATE)
    write_dataset(out / "test.csv", header, [level(n) for n in (2, 4, 6)], F16_RATE)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--silverbox", type=pathlib.Path, help="path to SNLS80mV.csv")
    p.add_argument("--f16", type=pathlib.Path, help="path to the F-16 BenchmarkData directory")
    p.add_argument("--out", type=pathlib.Path, default=pathlib.Path("benchmarks"))
    a = p.parse_args()
    if not a.silverbox and not a.f16:
        p.error("give --silverbox and/or --f16")
    if a.silverbox:
        silverbox(a.silverbox, a.out / "silverbox")
    if a.f16:
        f16(a.f16, a.out / "f16")


if __name__ == "__main__":
    main()
