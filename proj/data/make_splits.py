"""Regenerates the vendored raw train/test CSVs for the penguin and hawk datasets.

Sources (pip packages): palmerpenguins (penguins.csv) and rdatasets
(Stat2Data::Hawks). Only the columns used as features and label are kept.
Rows with missing values are kept in the raw files (split alternately between
train and test); the C++ loader drops them, leaving the final sizes
penguins 223/110 and hawks 596/295.
"""
import sys

import numpy as np
import pandas as pd


def split(df, label, n_train, seed, out_dir):
    complete = df.dropna()
    missing = df[df.isna().any(axis=1)]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(complete))
    train = complete.iloc[order[:n_train]]
    test = complete.iloc[order[n_train:]]
    train = pd.concat([train, missing.iloc[0::2]])
    test = pd.concat([test, missing.iloc[1::2]])
    for name, part in (("raw_train.csv", train), ("raw_test.csv", test)):
        part.to_csv(f"{out_dir}/{name}", index=False, na_rep="NA")


def main():
    import palmerpenguins
    import rdatasets

    penguins = palmerpenguins.load_penguins()[
        ["island", "bill_length_mm", "bill_depth_mm", "flipper_length_mm",
         "body_mass_g", "sex", "species"]]
    split(penguins, "species", 223, 2021, "penguins")

    hawks = rdatasets.data("Stat2Data", "Hawks")[
        ["Age", "Wing", "Weight", "Culmen", "Hallux", "Tail", "Species"]]
    split(hawks, "Species", 596, 2021, "hawks")


if __name__ == "__main__":
    sys.exit(main())
