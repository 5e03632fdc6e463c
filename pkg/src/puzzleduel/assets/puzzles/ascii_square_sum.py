def mystery(x):
    s = str(x)
    ascii_sum = sum(ord(c) for c in s)
    sqrt = int(ascii_sum ** 0.5)
    return sqrt * sqrt == ascii_sum
