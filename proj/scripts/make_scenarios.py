#!/usr/bin/env python3
"""Regenerates the shipped scenario sets under data/scenarios/.

Prices and features are fixture data; acquisition ratios come from
data/ar_table.json. Run from the repository root:

    python3 scripts/make_scenarios.py
"""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
AR_TABLE = json.loads((ROOT / "data" / "ar_table.json").read_text())["categories"]

# name -> (cost, wtp, initial, features)
CATALOG = {
    "Camera": {
        "single": ("Camera", 400, 550, 550),
        "products": {
            "Digital Camera": (400, 500, 550,
                               ["24.2MP resolution", "4K video recording",
                                "3-inch LCD screen", "built-in Wi-Fi and Bluetooth"]),
            "Film Camera": (250, 350, 400,
                            ["35mm film format", "manual focus",
                             "built-in light meter", "classic design"]),
            "DSLR Camera": (500, 550, 750,
                            ["24.1MP resolution", "4K video recording",
                             "interchangeable lenses", "optical viewfinder",
                             "advanced autofocus"]),
            "Action Camera": (150, 250, 300,
                              ["12MP resolution", "1080p video recording",
                               "waterproof up to 30m", "wide-angle lens"]),
        },
    },
    "Smartphone": {
        "single": ("Smartphone", 800, 1000, 1000),
        "products": {
            "Flagship Smartphone": (800, 1000, 1200,
                                    ["6.8-inch OLED display", "triple camera system",
                                     "5G connectivity", "all-day battery"]),
            "Mid-Range Smartphone": (400, 520, 650,
                                     ["6.4-inch LCD display", "dual camera",
                                      "fast charging"]),
            "Budget Smartphone": (200, 280, 350,
                                  ["6.1-inch display", "single camera",
                                   "expandable storage"]),
            "Gaming Smartphone": (600, 780, 950,
                                  ["144Hz display", "vapor-chamber cooling",
                                   "shoulder triggers"]),
        },
    },
    "Shoes": {
        "single": ("Shoes", 80, 150, 150),
        "products": {
            "Designer Shoes": (180, 260, 320,
                               ["Italian leather", "hand-stitched",
                                "signature sole"]),
            "Casual Shoes": (40, 75, 95,
                             ["canvas upper", "cushioned insole",
                              "everyday wear"]),
            "Athletic Shoes": (60, 105, 130,
                               ["breathable mesh", "responsive foam",
                                "grippy outsole"]),
            "Sandals": (25, 50, 65,
                        ["adjustable straps", "contoured footbed",
                         "water friendly"]),
        },
    },
    "Bicycle": {
        "single": ("Bicycle", 350, 600, 600),
        "products": {
            "Mountain Bike": (550, 850, 1100,
                              ["full suspension", "29-inch wheels",
                               "hydraulic disc brakes", "12-speed drivetrain"]),
            "Road Bike": (480, 700, 900,
                          ["carbon fork", "drop handlebars",
                           "22-speed groupset"]),
            "Hybrid Bike": (300, 480, 620,
                            ["upright geometry", "rack mounts",
                             "puncture-resistant tires"]),
            "Folding Bike": (200, 330, 420,
                             ["folds in 15 seconds", "20-inch wheels",
                              "carry handle"]),
        },
    },
    "Drone": {
        "single": ("Drone", 700, 1100, 1100),
        "products": {
            "Professional Drone": (900, 1400, 1800,
                                   ["8K camera", "3-axis gimbal",
                                    "45-minute flight time",
                                    "obstacle avoidance"]),
            "Recreational Drone": (250, 420, 550,
                                   ["4K camera", "GPS return-to-home",
                                    "30-minute flight time"]),
            "Racing Drone": (350, 540, 700,
                             ["120mph top speed", "FPV goggles ready",
                              "carbon frame"]),
            "Mini Drone": (80, 150, 200,
                           ["palm-sized", "1080p camera",
                            "indoor stabilization"]),
        },
    },
    "Soccer Ball": {
        "single": ("Soccer Ball", 25, 45, 45),
        "products": {
            "Premium Soccer Ball": (60, 110, 140,
                                    ["match-grade", "thermally bonded panels",
                                     "FIFA quality mark"]),
            "Training Soccer Ball": (18, 32, 40,
                                     ["durable cover", "butyl bladder",
                                      "all-weather"]),
            "Recreational Soccer Ball": (12, 24, 30,
                                         ["machine stitched", "soft touch",
                                          "park play"]),
            "Mini Soccer Ball": (8, 16, 20,
                                 ["size 1", "skills practice",
                                  "collectible design"]),
        },
    },
    "Bag": {
        "single": ("Bag", 120, 220, 220),
        "products": {
            "Leather Bag": (150, 260, 340,
                            ["full-grain leather", "brass hardware",
                             "laptop sleeve"]),
            "Backpack": (45, 85, 110,
                         ["30L capacity", "padded straps",
                          "rain cover"]),
            "Tote Bag": (30, 60, 80,
                         ["heavy canvas", "interior pocket",
                          "reinforced handles"]),
            "Drawstring Bag": (10, 22, 30,
                               ["lightweight nylon", "packs flat",
                                "gym ready"]),
        },
    },
    "Wine": {
        "single": ("Wine", 40, 80, 80),
        "products": {
            "Premium Wine": (70, 130, 170,
                             ["estate bottled", "15 years cellared",
                              "critics' choice"]),
            "Red Wine": (20, 38, 50,
                         ["full bodied", "oak aged",
                          "dark fruit notes"]),
            "White Wine": (15, 30, 40,
                           ["crisp acidity", "citrus notes",
                            "serve chilled"]),
            "Sparkling Wine": (25, 48, 60,
                               ["traditional method", "fine bubbles",
                                "celebration ready"]),
        },
    },
    "Cup": {
        "single": ("Cup", 10, 22, 22),
        "products": {
            "Ceramic Cup": (10, 22, 28,
                            ["hand glazed", "dishwasher safe",
                             "12oz capacity"]),
            "Glass Cup": (8, 18, 24,
                          ["borosilicate glass", "heat resistant",
                           "double walled"]),
            "Travel Cup": (14, 28, 36,
                           ["vacuum insulated", "leakproof lid",
                            "fits cup holders"]),
            "Plastic Cup": (3, 8, 12,
                            ["BPA free", "shatterproof",
                             "stackable"]),
        },
    },
}

SINGLE_REGIMES = ["vanilla", "deceptive", "monopoly", "installment",
                  "negative-perception"]
MULTI_REGIMES = ["deceptive", "monopoly", "installment", "negative-perception"]


def slug(text):
    return text.lower().replace(" ", "-")


def single_scenario(regime, category):
    name, cost, wtp, initial = CATALOG[category]["single"]
    return {
        "id": f"{regime}-single-{slug(category)}",
        "market": {"regime": regime, "product_mode": "single"},
        "category": category,
        "products": [{
            "id": slug(name),
            "name": name,
            "cost": cost,
            "wtp": wtp,
            "initial_price": initial,
            "features": CATALOG[category]["products"][AR_TABLE[category]["desired"]][3],
            "ar_to_desired": 1.0,
        }],
        "desired_product": slug(name),
        "max_messages": 20,
    }


def multi_scenario(regime, category):
    entry = CATALOG[category]
    desired_name = AR_TABLE[category]["desired"]
    products = []
    for name, (cost, wtp, initial, features) in entry["products"].items():
        products.append({
            "id": slug(name),
            "name": name,
            "cost": cost,
            "wtp": wtp,
            "initial_price": initial,
            "features": features,
            "ar_to_desired": AR_TABLE[category]["values"][name],
        })
    return {
        "id": f"{regime}-multi-{slug(category)}",
        "market": {"regime": regime, "product_mode": "multi"},
        "category": category,
        "products": products,
        "desired_product": slug(desired_name),
        "max_messages": 20,
    }


def anchoring_scenarios():
    features = CATALOG["Camera"]["products"]["Digital Camera"][3]
    base = {
        "market": {"regime": "vanilla", "product_mode": "single"},
        "category": "Camera",
        "desired_product": "camera",
        "max_messages": 20,
    }
    out = []
    for suffix, initial, buyer_first in (("anchor-550", 550, False),
                                         ("anchor-520", 520, False),
                                         ("buyer-first", 550, True)):
        s = dict(base)
        s["id"] = f"vanilla-single-camera-{suffix}"
        s["products"] = [{
            "id": "camera",
            "name": "Camera",
            "cost": 400,
            "wtp": 500,
            "initial_price": initial,
            "features": features,
            "ar_to_desired": 1.0,
        }]
        if buyer_first:
            s["buyer_first_offer"] = True
        out.append(s)
    return out


def main():
    out_dir = ROOT / "data" / "scenarios"
    out_dir.mkdir(parents=True, exist_ok=True)

    benchmark = []
    for regime in SINGLE_REGIMES:
        for category in CATALOG:
            benchmark.append(single_scenario(regime, category))
    for regime in MULTI_REGIMES:
        for category in CATALOG:
            benchmark.append(multi_scenario(regime, category))
    with open(out_dir / "benchmark.jsonl", "w") as f:
        for s in benchmark:
            f.write(json.dumps(s, sort_keys=True) + "\n")

    with open(out_dir / "anchoring.jsonl", "w") as f:
        for s in anchoring_scenarios():
            f.write(json.dumps(s, sort_keys=True) + "\n")

    print(f"wrote {len(benchmark)} benchmark scenarios and 3 anchoring variants")


if __name__ == "__main__":
    main()
