"""Published (IoU, Dice) percentages for eleven segmentation models.

Columns: UTSW 6mm, UTSW 3mm, OCTA-500 6mm, OCTA-500 3mm, ROSE 3mm.
"""

COLUMNS = ("utsw-6mm", "utsw-3mm", "octa500-6mm", "octa500-3mm", "rose-3mm")

SCORES = {
    "U-Net":           [(95.14, 97.51), (95.23, 97.56), (96.93, 98.44), (98.75, 99.37), (97.94, 98.96)],
    "U-Net++":         [(95.68, 97.81), (96.64, 98.29), (97.65, 98.81), (97.96, 98.97), (97.52, 98.75)],
    "Attention U-Net": [(95.78, 97.84), (96.04, 97.98), (97.05, 98.50), (98.61, 99.30), (97.92, 98.95)],
    "Mask R-CNN":      [(92.35, 96.02), (91.35, 95.48), (92.06, 95.87), (93.50, 96.64), (91.23, 95.41)],
    "YOLOv11-x":       [(95.81, 97.86), (96.55, 98.24), (95.93, 97.92), (97.66, 98.82), (97.83, 98.89)],
    "MedSAM":          [(96.38, 98.16), (96.47, 98.20), (96.01, 97.95), (98.94, 99.47), (97.89, 98.93)],
    "CauSSL":          [(95.23, 97.56), (95.47, 97.68), (96.32, 98.04), (98.15, 99.08), (97.80, 98.89)],
    "UniverSeg":       [(95.30, 97.58), (95.52, 97.70), (96.58, 98.17), (98.42, 99.22), (97.07, 98.01)],
    "S2VNet":          [(95.68, 97.81), (95.36, 97.63), (96.45, 98.11), (98.27, 99.15), (97.92, 98.95)],
    "Tyche":           [(95.80, 97.85), (95.19, 97.53), (96.28, 98.02), (98.11, 99.06), (97.76, 98.87)],
    "X-GAN":           [(99.41, 99.71), (98.66, 99.33), (99.21, 99.60), (99.42, 99.71), (99.19, 99.59)],
}


def utsw_pairs():
    """The 22 (model, column, iou, dice) records of the two UTSW columns."""
    return [(m, COLUMNS[c], *row[c]) for m, row in SCORES.items() for c in (0, 1)]


def identity_gaps(pairs):
    """``predicted - reported`` Dice in percent, predicted from the reported IoU."""
    out = []
    for model, col, j, d in pairs:
        pred = 200.0 * j / (100.0 + j)
        out.append((model, col, j, d, pred, pred - d))
    return out
