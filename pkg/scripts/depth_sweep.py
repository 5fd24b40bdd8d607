"""Final training loss of the two-hop chain as a function of the number of blocks.

Prints CSV (layers,epochs,final_loss,y_hat_C) for external plotting.
"""

import argparse
import csv
import sys

from qcrm.dsl import parse
from qcrm.tasks import read_task_text
from qcrm.train import TrainConfig, train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-layers", type=int, default=4)
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--lr", type=float, default=0.05)
    args = ap.parse_args()

    base = parse(read_task_text("chain_depth1.qrp"))
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["layers", "epochs", "final_loss", "y_hat_C"])
    for layers in range(1, args.max_layers + 1):
        base.layers = layers
        trace = train(base, TrainConfig(epochs=args.epochs, learning_rate=args.lr, threshold=0.0))
        y_c = trace.report.y_hat[base.index("C")]
        out.writerow([layers, trace.epochs_run, f"{trace.final_loss:.8g}", f"{y_c:.8g}"])


if __name__ == "__main__":
    main()
