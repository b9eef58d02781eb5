"""Regenerates tests/oracle_values.hpp with mpmath at 40 significant digits."""
import mpmath as mp

mp.mp.dps = 40
out = []


def emit(line=""):
    out.append(line)


def f(x):
    return mp.nstr(x, 20, min_fixed=-1, max_fixed=-1) if False else "%s" % mp.nstr(x, 20)


def c(z):
    return "{%s, %s}" % (f(mp.re(z)), f(mp.im(z)))


emit("#pragma once")
emit("// Generated by tests/oracles/generate.py (mpmath, 40 digits). Do not edit.")
emit("")
emit("#include <complex>")
emit("")
emit("namespace oracle {")
emit("")
emit("struct BesselRow { double x, j0, j1, y0, y1; };")
emit("inline constexpr BesselRow kBessel[] = {")
for x in ["1e-3", "0.5", "1.9", "2.1", "5", "8", "12.5", "24.9", "25.1", "40", "100", "870.3"]:
    xv = mp.mpf(x)
    emit("    {%s, %s, %s, %s, %s}," % (x, f(mp.besselj(0, xv)), f(mp.besselj(1, xv)), f(mp.bessely(0, xv)), f(mp.bessely(1, xv))))
emit("};")
emit("")
emit("struct ComplexRow { double re, im, out_re, out_im; };")
emit("// erfcx(z) = exp(z^2) erfc(z)")
emit("inline constexpr ComplexRow kErfcx[] = {")
for z in [mp.mpc(0.5, 0), mp.mpc(3, 2), mp.mpc(-1, 0.5), mp.mpc(0.1, -4), mp.mpc(6, 0), mp.mpc(0, 0.3), mp.mpc(2.5, -1.5)]:
    v = mp.exp(z * z) * mp.erfc(z)
    emit("    {%s, %s, %s, %s}," % (f(z.real), f(z.imag), f(v.real), f(v.imag)))
emit("};")
emit("")
emit("struct ExpintRow { double x; int n; double value; };")
emit("inline constexpr ExpintRow kExpint[] = {")
for x in ["0.01", "0.7", "1.3", "10", "55"]:
    for n in [0, 1, 2, 5, 20, 47]:
        emit("    {%s, %d, %s}," % (x, n, f(mp.expint(n, mp.mpf(x)))))
emit("};")
emit("")


def spectral(L, k, alpha, X, Y, terms):
    s0 = s1 = s2 = mp.mpc(0)
    for n in range(-terms, terms + 1):
        an = alpha + 2 * mp.pi * n / L
        if abs(an) < k:
            bn = mp.sqrt(k * k - an * an)
        else:
            bn = 1j * mp.sqrt(an * an - k * k)
        e = mp.exp(1j * an * X + 1j * bn * abs(Y))
        s0 += e / bn
        s1 += an * e / bn
        s2 += e
    g = 1j / (2 * L) * s0
    d1 = 1j / (2 * L) * 1j * s1
    d2 = -mp.sign(Y) / (2 * L) * s2
    return g, d1, d2


emit("// G(X, Y), dG/dX, dG/dY for period 2 pi by the spectral series.")
emit("struct GreenRow { double k, alpha, X, Y; std::complex<double> g, d1, d2; };")
emit("inline const GreenRow kGreen[] = {")
L = 2 * mp.pi
for (k, alpha) in [(5.2 * mp.pi, mp.mpf(0)), (5.2 * mp.pi, 5.2 * mp.pi * mp.cos(mp.pi / 2 + 3 * mp.pi / 16)), (4.9, mp.mpf(0.3))]:
    for (X, Y) in [(0.7, 0.9), (-2.1, 0.3), (0.2, -0.05), (3.0, -1.7)]:
        terms = int(60 / (abs(Y))) + 60
        g, d1, d2 = spectral(L, k, alpha, mp.mpf(X), mp.mpf(Y), terms)
        emit("    {%s, %s, %s, %s, %s, %s, %s}," % (f(k), f(alpha), X, Y, c(g), c(d1), c(d2)))
emit("};")
emit("")

emit("// Integral of H0^(1)(k |x - y|) over the square |y_i| <= h/2, x = (px, py).")
emit("struct SquareRow { double k, h, px, py; std::complex<double> value; };")
emit("inline const SquareRow kHankelSquare[] = {")
k = 5.2 * mp.pi
h = mp.mpf(1.6) / 96


def corner(X, Y):
    # integral of H0(k r) over [0, X] x [0, Y] in polar form about the origin
    if X == 0 or Y == 0:
        return mp.mpc(0)
    radial = lambda R: R * mp.hankel1(1, k * R) / k + 2j / (mp.pi * k * k)
    t = mp.atan2(Y, X)
    a = mp.quad(lambda th: radial(X / mp.cos(th)), [0, t])
    b = mp.quad(lambda th: radial(Y / mp.sin(th)), [t, mp.pi / 2])
    return a + b


def signed(X, Y):
    return mp.sign(X) * mp.sign(Y) * corner(abs(X), abs(Y))


for (p, q) in [(0, 0), (1, 0), (1, 1), (2, 1), (3, 3)]:
    px, py = p * h, q * h
    a = h / 2
    x0, x1, y0, y1 = -a - px, a - px, -a - py, a - py
    v = signed(x1, y1) - signed(x0, y1) - signed(x1, y0) + signed(x0, y0)
    emit("    {%s, %s, %s, %s, %s}," % (f(k), f(h), f(px), f(py), c(v)))
emit("};")
emit("")
emit("}  // namespace oracle")
print("\n".join(out))
