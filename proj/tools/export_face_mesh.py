#!/usr/bin/env python3
"""Write <stem>.landmarks.json next to each face image using MediaPipe Face Mesh.

    pip install mediapipe pillow numpy
    python3 tools/export_face_mesh.py stimuli/*.png

Contours are named from the viewer's side: left_* is on the image's left.
"""
import argparse
import json
import pathlib
import sys

# Face Mesh indices. Subject-right features appear on the image's left.
CONTOURS = {
    "left_eyebrow": ([70, 63, 105, 66, 107], False),
    "right_eyebrow": ([336, 296, 334, 293, 300], False),
    "left_iris": ([469, 470, 471, 472], True),
    "right_iris": ([474, 475, 476, 477], True),
    "outer_lips": ([61, 185, 40, 39, 37, 0, 267, 269, 270, 409,
                    291, 375, 321, 405, 314, 17, 84, 181, 91, 146], True),
    "inner_lips": ([78, 191, 80, 81, 82, 13, 312, 311, 310, 415,
                    308, 324, 318, 402, 317, 14, 87, 178, 88, 95], True),
}


def landmarks_for(mesh, path):
    import numpy as np
    from PIL import Image

    rgb = np.asarray(Image.open(path).convert("RGB"))
    result = mesh.process(rgb)
    if not result.multi_face_landmarks:
        return None
    lm = result.multi_face_landmarks[0].landmark
    points, contours = [], {}
    for name, (indices, closed) in CONTOURS.items():
        start = len(points)
        for i in indices:
            points.append([min(max(lm[i].x, 0.0), 1.0), min(max(lm[i].y, 0.0), 1.0)])
        contours[name] = {"indices": list(range(start, len(points))), "closed": closed}
    return {"points": points, "contours": contours}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("images", nargs="+", type=pathlib.Path)
    ap.add_argument("--overwrite", action="store_true")
    args = ap.parse_args()

    try:
        import mediapipe as mp
    except ImportError:
        sys.exit("mediapipe is not installed (pip install mediapipe pillow numpy)")

    failed = 0
    with mp.solutions.face_mesh.FaceMesh(static_image_mode=True, max_num_faces=1,
                                         refine_landmarks=True) as mesh:
        for image in args.images:
            out = image.with_name(image.stem + ".landmarks.json")
            if out.exists() and not args.overwrite:
                continue
            doc = landmarks_for(mesh, image)
            if doc is None:
                print(f"{image}: no face found", file=sys.stderr)
                failed += 1
                continue
            out.write_text(json.dumps(doc))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
