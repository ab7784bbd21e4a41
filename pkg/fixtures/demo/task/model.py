import math


def run(xs):
    total = 0.0
    for x in xs:
        total += math.sin(x) * math.cos(x)
    return total


def get_inputs():
    return [i / 1000.0 for i in range(10000)]
