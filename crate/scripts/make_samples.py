"""Synthetic 256x256 faces with CelebAMask-HQ style parse masks.

Writes samples/<name>.png and samples/<name>_mask.png. Deterministic.
"""

import os

import numpy as np
from PIL import Image

SIZE = 256
OUT = os.path.join(os.path.dirname(__file__), "..", "samples")

BG, SKIN, LBROW, RBROW, LEYE, REYE, NOSE, ULIP, LLIP, NECK, HAIR, MOUTH = 0, 1, 2, 3, 4, 5, 10, 12, 13, 14, 17, 11


def ellipse(yy, xx, cy, cx, ry, rx):
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def smooth_noise(rng, scale, amp):
    coarse = rng.normal(0, 1, (SIZE // scale + 2, SIZE // scale + 2, 3))
    img = Image.fromarray(((coarse - coarse.min()) / np.ptp(coarse) * 255).astype(np.uint8))
    img = img.resize((SIZE + 2 * scale, SIZE + 2 * scale), Image.BICUBIC)
    arr = np.asarray(img, dtype=np.float64)[scale:scale + SIZE, scale:scale + SIZE] / 255.0 - 0.5
    return arr * amp


def face(name, seed, shift, skin, lips, shadow, hair, bg):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    dy, dx = shift
    labels = np.full((SIZE, SIZE), BG, np.uint8)
    labels[ellipse(yy, xx, 250, 128, 40, 60)] = NECK
    labels[ellipse(yy, xx, 100 + dy, 128 + dx, 95, 92) & (yy < 120 + dy)] = HAIR
    labels[ellipse(yy, xx, 130 + dy, 128 + dx, 92, 72)] = SKIN
    labels[ellipse(yy, xx, 140 + dy, 128 + dx, 22, 10)] = NOSE
    for cx, brow, eye in ((98, LBROW, LEYE), (158, RBROW, REYE)):
        labels[ellipse(yy, xx, 92 + dy, cx + dx, 5, 18)] = brow
        labels[ellipse(yy, xx, 112 + dy, cx + dx, 7, 15)] = eye
    labels[ellipse(yy, xx, 176 + dy, 128 + dx, 6, 26) & (yy < 176 + dy)] = ULIP
    labels[ellipse(yy, xx, 177 + dy, 128 + dx, 9, 26) & (yy >= 177 + dy)] = LLIP
    labels[ellipse(yy, xx, 176 + dy, 128 + dx, 1.5, 20)] = MOUTH

    img = np.zeros((SIZE, SIZE, 3))
    img[:] = bg
    palette = {SKIN: skin, NOSE: skin, NECK: skin, HAIR: hair, ULIP: lips, LLIP: lips,
               LBROW: hair, RBROW: hair, LEYE: (235, 235, 230), REYE: (235, 235, 230), MOUTH: (90, 30, 30)}
    for label, colour in palette.items():
        img[labels == label] = colour
    # eye shadow around the eyes on facial skin
    for cx in (98, 158):
        ring = ellipse(yy, xx, 108 + dy, cx + dx, 16, 24) & np.isin(labels, (SKIN, LBROW, RBROW))
        img[ring] = 0.45 * img[ring] + 0.55 * np.array(shadow)
        img[ellipse(yy, xx, 112 + dy, cx + dx, 4, 4)] = (40, 30, 25)
    img += smooth_noise(rng, 8, 40.0)
    img += rng.normal(0, 4.0, img.shape)
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Image.fromarray(img, "RGB").save(os.path.join(OUT, f"{name}.png"))
    Image.fromarray(labels, "L").save(os.path.join(OUT, f"{name}_mask.png"))


def main():
    os.makedirs(OUT, exist_ok=True)
    face("bare", 1, (0, 0), (224, 188, 160), (205, 140, 130), (224, 188, 160), (60, 40, 30), (200, 210, 220))
    face("red_lips", 2, (4, -3), (230, 190, 165), (190, 20, 40), (150, 90, 140), (30, 25, 20), (180, 200, 180))
    face("smoky", 3, (-3, 5), (210, 170, 140), (150, 60, 70), (70, 60, 70), (90, 60, 35), (220, 200, 190))
    face("coral", 4, (2, 2), (235, 200, 175), (240, 110, 90), (220, 140, 110), (120, 80, 50), (190, 190, 230))


if __name__ == "__main__":
    main()
