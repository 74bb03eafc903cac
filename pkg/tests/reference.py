"""Independent reference implementations used as test oracles.

These deliberately avoid the library's code paths: plain loops, dicts and
math only, so a bug in the package cannot hide in its own oracle.
"""

import math


def ap_reference(scores, labels):
    """Average precision by explicit threshold scan over distinct scores.

    At each distinct score value (descending) every pair scoring >= that
    value is predicted positive; precision/recall come from direct counts.
    """
    scores = list(map(float, scores))
    labels = list(map(int, labels))
    total_pos = sum(1 for y in labels if y == 1)
    assert total_pos > 0
    ap = 0.0
    prev_recall = 0.0
    for threshold in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 1)
        kept = sum(1 for s in scores if s >= threshold)
        recall = tp / total_pos
        precision = tp / kept
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def confusion_reference(preds, labels):
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labels):
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == -1:
            fp += 1
        elif p == -1 and y == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def binary_metrics_reference(preds, labels):
    tp, fp, fn, tn = confusion_reference(preds, labels)
    n = tp + fp + fn + tn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (tp + tn) / n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "n": n,
    }


def masked_flatten_reference(values, gt_values):
    out_vals, out_labels = [], []
    for row_v, row_g in zip(values, gt_values):
        for v, g in zip(row_v, row_g):
            if g != 0:
                out_vals.append(float(v))
                out_labels.append(int(g))
    return out_vals, out_labels


def tfidf_reference(docs):
    """Hand-rolled TF-IDF: returns (term -> idf, transform function)."""
    docs = [list(d) for d in docs if d]
    n_docs = len(docs)
    df = {}
    for doc in docs:
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    idf = {t: math.log((1 + n_docs) / (1 + c)) + 1.0 for t, c in df.items()}

    def transform(doc):
        counts = {}
        for t in doc:
            counts[t] = counts.get(t, 0) + 1
        weights = {t: c * idf[t] for t, c in counts.items() if t in idf}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0:
            return {}
        return {t: w / norm for t, w in weights.items()}

    return idf, transform


def fd_gradient(fn, x, step=1e-6):
    """Central finite differences of a scalar function of a vector."""
    grad = []
    for i in range(len(x)):
        hi = list(x)
        lo = list(x)
        hi[i] += step
        lo[i] -= step
        grad.append((fn(hi) - fn(lo)) / (2 * step))
    return grad


def fleiss_kappa_reference(table):
    n_items = len(table)
    n_cats = len(table[0])
    r = sum(table[0])
    p_obs = 0.0
    for row in table:
        p_obs += (sum(c * c for c in row) - r) / (r * (r - 1))
    p_obs /= n_items
    p_chance = 0.0
    for j in range(n_cats):
        share = sum(row[j] for row in table) / (n_items * r)
        p_chance += share * share
    return (p_obs - p_chance) / (1 - p_chance)


def random_tree(rng, n_nodes, base_time=1000):
    """Random parent choices with non-decreasing timestamps.

    Returns a list of (tweet_id, parent_id, created_at) with node 0 as root.
    """
    rows = [("n000", None, base_time)]
    t = base_time
    for i in range(1, n_nodes):
        parent = int(rng.integers(0, i))
        t += int(rng.integers(0, 3))  # allows timestamp ties
        rows.append((f"n{i:03d}", f"n{parent:03d}", t))
    return rows
