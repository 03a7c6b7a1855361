#!/usr/bin/env python3
"""Regenerate the bundled zeta-zero fixture.

Ordinates come from Arb's certified zero isolation (python-flint).  The first
HP_COUNT ordinates are written with HP_DIGITS fractional digits so that the
lattice certificate can be re-checked at paper scale; the remainder carry
LP_DIGITS fractional digits.  Every printed decimal is within half a unit of
its last place of the true ordinate, so the loader's default half-width of one
unit in the last place is a valid enclosure.
"""
import argparse
import sys

from flint import acb, ctx


def exact_round(ball, digits):
    mid = ball.mid()
    man, exp = mid.man_exp()
    man, exp = int(man), int(exp)
    scale = 10 ** digits
    if exp >= 0:
        num, den = man * (2 ** exp) * scale, 1
    else:
        num, den = man * scale, 2 ** (-exp)
    q, r = divmod(num, den)
    if 2 * r >= den:
        q += 1
    rad = ball.rad()
    # the radius must leave room for the rounding error inside one ulp
    if not (rad * scale < 0.25):
        raise SystemExit(f"radius too large for {digits} digits: {rad}")
    s = str(q).rjust(digits + 1, "0")
    return s[:-digits] + "." + s[-digits:]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=10100)
    ap.add_argument("--hp-count", type=int, default=32)
    ap.add_argument("--hp-digits", type=int, default=1100)
    ap.add_argument("--lp-digits", type=int, default=15)
    args = ap.parse_args()

    out = sys.stdout
    out.write("# Ordinates of the nontrivial zeros of zeta, 0-based (line 1 is gamma_0).\n")
    out.write(f"# First {args.hp_count} to {args.hp_digits} places, then {args.lp_digits} places.\n")
    out.write("# Generated by scripts/generate_zero_fixture.py from Arb zero isolation.\n")

    ctx.prec = int(args.hp_digits * 3.33) + 128
    for z in acb.zeta_zeros(1, args.hp_count):
        out.write(exact_round(z.imag, args.hp_digits) + "\n")

    ctx.prec = 128
    rest = args.count - args.hp_count
    start = args.hp_count + 1
    while rest > 0:
        chunk = min(rest, 1000)
        for z in acb.zeta_zeros(start, chunk):
            out.write(exact_round(z.imag, args.lp_digits) + "\n")
        start += chunk
        rest -= chunk


if __name__ == "__main__":
    main()
