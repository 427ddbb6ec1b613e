#!/usr/bin/env python3
"""Combine NSL-KDD KDDTrain+.txt / KDDTest+.txt into one headered binary CSV."""
import argparse
import csv

FEATURES = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("inputs", nargs="+", help="raw NSL-KDD files (no header)")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    rows = 0
    with open(args.out, "w", newline="") as out:
        w = csv.writer(out)
        w.writerow(FEATURES + ["class"])
        for path in args.inputs:
            with open(path, newline="") as f:
                for rec in csv.reader(f):
                    if not rec:
                        continue
                    label = rec[41].strip()
                    w.writerow(rec[:41] + ["normal" if label == "normal" else "attack"])
                    rows += 1
    print(f"wrote {rows} rows to {args.out}")


if __name__ == "__main__":
    main()
