"""Regenerates the GeoJSON files in this directory. Deterministic."""

import json
import random
from pathlib import Path

HERE = Path(__file__).parent

FLOODED = [
    ("North Channel", 1.8, [(-116.5164, 43.6710), (-116.4950, 43.6623), (-116.4700, 43.6690), (-116.4820, 43.6800), (-116.5050, 43.6790)]),
    ("Garden City", 0.9, [(-116.4500, 43.6750), (-116.4200, 43.6720), (-116.4050, 43.6850), (-116.4350, 43.6948), (-116.4550, 43.6880)]),
    ("Barber Park", 1.2, [(-116.3800, 43.6650), (-116.3500, 43.6640), (-116.3400, 43.6760), (-116.3700, 43.6800)]),
    ("East Bend", 0.6, [(-116.3300, 43.6800), (-116.2989, 43.6790), (-116.3050, 43.6920), (-116.3250, 43.6900)]),
]

HIGHWAYS = [
    ("I-84", "motorway", [(-116.56, 43.60), (-116.45, 43.615), (-116.33, 43.625), (-116.26, 43.64)]),
    ("I-84", "motorway", [(-116.26, 43.64), (-116.20, 43.655)]),
    ("I-184", "motorway", [(-116.33, 43.625), (-116.27, 43.62), (-116.22, 43.62)]),
    ("US-20", "trunk", [(-116.56, 43.67), (-116.48, 43.665), (-116.40, 43.66)]),
    ("US-20", "trunk", [(-116.40, 43.66), (-116.31, 43.655)]),
    ("ID-55", "primary", [(-116.35, 43.60), (-116.35, 43.68), (-116.36, 43.75)]),
    ("Chinden Blvd", "primary", [(-116.52, 43.655), (-116.44, 43.66), (-116.36, 43.665)]),
    ("Eagle Rd", "primary", [(-116.50, 43.58), (-116.50, 43.66), (-116.49, 43.72)]),
    ("Eagle Rd", "primary", [(-116.49, 43.72), (-116.49, 43.76)]),
    ("State St", "secondary", [(-116.46, 43.70), (-116.38, 43.685), (-116.25, 43.66)]),
    ("Warm Springs Ave", "secondary", [(-116.24, 43.61), (-116.18, 43.60)]),
    ("Federal Way", "secondary", [(-116.22, 43.61), (-116.18, 43.57)]),
]

STIB = [
    ("1", "metro", "#C4008F", [(4.2880, 50.8540), (4.3370, 50.8520), (4.3580, 50.8480), (4.3990, 50.8420), (4.4430, 50.8330)]),
    ("2", "metro", "#F57000", [(4.3450, 50.8570), (4.3600, 50.8570), (4.3670, 50.8370), (4.3450, 50.8350)]),
    ("5", "metro", "#E6B012", [(4.2680, 50.8260), (4.3200, 50.8360), (4.3580, 50.8480), (4.4100, 50.8470), (4.4380, 50.8230)]),
    ("6", "metro", "#0078AD", [(4.3340, 50.8960), (4.3330, 50.8720), (4.3460, 50.8570), (4.3600, 50.8570)]),
    ("7", "tram", "#E2EA0A", [(4.3570, 50.8950), (4.3910, 50.8780), (4.4020, 50.8400), (4.3950, 50.8130)]),
    ("25", "tram", "#991F36", [(4.3850, 50.8840), (4.3890, 50.8560), (4.3820, 50.8170)]),
    ("55", "tram", "#F6A90B", [(4.3580, 50.8900), (4.3630, 50.8700), (4.3540, 50.8560)]),
    ("71", "bus", "#1A945A", [(4.3540, 50.8450), (4.3700, 50.8330), (4.3860, 50.8170), (4.4020, 50.8030)]),
]


def ring(points):
    return [list(p) for p in points] + [list(points[0])]


def inside(x, y, poly):
    hit = False
    n = len(poly)
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
            hit = not hit
    return hit


def collection(features, name):
    return {"type": "FeatureCollection", "name": name, "features": features}


def feature(props, geometry):
    return {"type": "Feature", "properties": props, "geometry": geometry}


def write(name, doc):
    (HERE / f"{name}.geojson").write_text(json.dumps(doc, indent=1) + "\n")


def main():
    write("flooded_areas", collection([
        feature({"zone": z, "depth_m": d}, {"type": "Polygon", "coordinates": [ring(p)]})
        for z, d, p in FLOODED
    ], "flooded_areas"))

    rng = random.Random(20240611)
    kinds = ["school", "hospital", "fire_station"]
    features = []
    for i in range(100):
        if i % 3 == 0:
            _, _, poly = FLOODED[(i // 3) % len(FLOODED)]
            xs = [p[0] for p in poly]
            ys = [p[1] for p in poly]
            while True:
                x, y = rng.uniform(min(xs), max(xs)), rng.uniform(min(ys), max(ys))
                if inside(x, y, poly):
                    break
        else:
            x, y = rng.uniform(-116.56, -116.26), rng.uniform(43.63, 43.72)
        amenity = kinds[i] if i < 3 else rng.choice(kinds)
        features.append(feature({
            "id": f"F{i + 1:04d}",
            "name": f"{amenity.replace('_', ' ').title()} {i + 1}",
            "amenity": amenity,
            "contact": f"208-555-{1000 + 37 * i:04d}",
        }, {"type": "Point", "coordinates": [round(x, 6), round(y, 6)]}))
    write("facilities", collection(features, "facilities"))

    write("highways", collection([
        feature({"name": n, "highway": k}, {"type": "LineString", "coordinates": [list(p) for p in pts]})
        for n, k, pts in HIGHWAYS
    ], "highways"))

    write("stib", collection([
        feature({"route_short_name": r, "route_type": t, "route_color": c}, {"type": "LineString", "coordinates": [list(p) for p in pts]})
        for r, t, c, pts in STIB
    ], "stib"))


if __name__ == "__main__":
    main()
