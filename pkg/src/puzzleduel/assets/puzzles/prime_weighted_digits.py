def mystery(x):
    if not isinstance(x, int) or x < 10**7 or x >= 10**8:
        return False
    
    s = str(x)
    d = [int(c) for c in s]
    n = len(d)
    
    # Prime sieve for generating weight sequence
    def primes_from(lo, hi):
        sieve = [True] * (hi + 1)
        sieve[0] = sieve[1] = False
        for i in range(2, int(hi**0.5) + 1):
            if sieve[i]:
                for j in range(i*i, hi + 1, i):
                    sieve[j] = False
        return [p for p in range(lo, hi + 1) if sieve[p]]
    
    P = primes_from(30, 70)[:n]
    
    # Constraint 1: weighted sum with consecutive primes
    c1 = sum(d[i] * P[i] for i in range(n))
    
    # Constraint 2: symmetric/reflected digit product sum
    c2 = sum(d[i] * d[n-1-i] for i in range(n//2))
    
    # Constraint 3: XOR chain of adjacent digit products
    c3 = 0
    for i in range(n//2):
        c3 ^= d[2*i] * d[2*i+1]
    
    return c1 == 2026 and c2 == 88 and c3 == 22
