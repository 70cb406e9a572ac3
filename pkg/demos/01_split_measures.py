"""
Entropy, gain and gain ratio on the Liver sample
=================================================

The 14-record Liver table is small enough to check every split statistic
by hand. This script prints them next to the best threshold on the one
numeric attribute.
"""

from treenoise import embedded_liver_sample
from treenoise.tree import best_numeric_split, entropy, gain, gain_ratio, partition_entropy, split_info

ds = embedded_liver_sample()
counts = ds.class_counts()
print("class counts:", counts)
print(f"entropy of the whole table: {entropy(counts):.4f} bits")


def partition(attr):
    col = ds.column(attr)
    return [{c: int(((col == v) & (ds.labels == c)).sum()) for c in counts} for v in sorted(set(col))]


# Categorical attributes split multiway, one branch per value.
for attr in ("LiverSize", "EatsPizza"):
    parts = partition(attr)
    print(
        f"{attr:<10} partition entropy {partition_entropy(parts):.4f}"
        f"  gain {gain(counts, parts):.4f}"
        f"  split info {split_info(parts):.4f}"
        f"  gain ratio {gain_ratio(counts, parts):.4f}"
    )

# Numeric attributes split in two at a midpoint between adjacent distinct values.
threshold, score = best_numeric_split(ds, "PatientsWeight")
print(f"PatientsWeight best threshold {threshold}  gain {score:.4f}")
