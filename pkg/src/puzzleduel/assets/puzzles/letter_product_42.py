def mystery(x):
    if not isinstance(x, str) or len(x) != 6:
        return False
    if not x.isalpha():
        return False
    v = 1
    for c in x.lower():
        v = (v * (ord(c) - 96)) 
    return v == 42 and x[0].isupper() and x[-1].islower()
