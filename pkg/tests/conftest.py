"""Shared fixtures and independent oracles.

mu_oracle integrates exp(-i k . x) * rho(x) directly over the body with
tensor-product Gauss-Legendre rules in body-adapted coordinates (plus a
periodic trapezoid rule in the azimuth for curved bodies).  It never
touches the closed-form factors, so it is a genuinely independent check
of the geometry module.
"""

from __future__ import annotations

import numpy as np
import pytest

from cslheat import (
    Cuboid,
    Cylinder,
    Layer,
    LayeredStack,
    Material,
    PointMass,
    Sphere,
)

R_C = 1e-7


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def _leggauss(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _phase_sum(points, weights, k):
    """sum_j w_j exp(-i k . x_j) for one k (3,) or a batch (M, 3)."""
    k = np.asarray(k, dtype=float)
    if k.ndim == 1:
        return np.sum(weights * np.exp(-1j * (points @ k)))
    out = np.empty(len(k), dtype=complex)
    chunk = max(1, 4_000_000 // len(points))
    for i in range(0, len(k), chunk):
        out[i : i + chunk] = weights @ np.exp(-1j * (points @ k[i : i + chunk].T))
    return out


def mu_oracle(model, k, n=48):
    """Direct 3D numerical integration of exp(-i k.x) rho(x) over the body."""
    k = np.asarray(k, dtype=float)
    off = np.asarray(model.offset, dtype=float)

    if isinstance(model, PointMass):
        pos = np.asarray(model.position, float) + off
        return model.mass * np.exp(-1j * (k @ pos))

    if isinstance(model, Cuboid):
        xs, wx = _leggauss(n, -0.5 * model.lx, 0.5 * model.lx)
        ys, wy = _leggauss(n, -0.5 * model.ly, 0.5 * model.ly)
        zs, wz = _leggauss(n, -0.5 * model.lz, 0.5 * model.lz)
        grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
        w = (wx[:, None, None] * wy[None, :, None] * wz[None, None, :]).ravel()
        return model.material.density * _phase_sum(grid + off, w, k)

    if isinstance(model, LayeredStack):
        xs, wx = _leggauss(n, -0.5 * model.lx, 0.5 * model.lx)
        ys, wy = _leggauss(n, -0.5 * model.ly, 0.5 * model.ly)
        zs_parts, wz_parts = [], []
        z0 = -0.5 * model.height
        for layer in model.layers:
            zs_l, wz_l = _leggauss(n, z0, z0 + layer.thickness)
            zs_parts.append(zs_l)
            wz_parts.append(wz_l * layer.material.density)
            z0 += layer.thickness
        zs = np.concatenate(zs_parts)
        wz = np.concatenate(wz_parts)
        grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
        w = (wx[:, None, None] * wy[None, :, None] * wz[None, None, :]).ravel()
        return _phase_sum(grid + off, w, k)

    if isinstance(model, Sphere):
        rs, wr = _leggauss(n, 0.0, model.radius)
        mus, wmu = _leggauss(n, -1.0, 1.0)
        nphi = 2 * n
        phis = 2.0 * np.pi * np.arange(nphi) / nphi
        wphi = 2.0 * np.pi / nphi
        sin_t = np.sqrt(1.0 - mus**2)
        x = rs[:, None, None] * sin_t[None, :, None] * np.cos(phis)[None, None, :]
        y = rs[:, None, None] * sin_t[None, :, None] * np.sin(phis)[None, None, :]
        z = rs[:, None, None] * mus[None, :, None] * np.ones(nphi)[None, None, :]
        grid = np.stack([x, y, z], axis=-1).reshape(-1, 3)
        w = (
            (wr * rs**2)[:, None, None] * wmu[None, :, None] * wphi
            * np.ones(nphi)[None, None, :]
        ).ravel()
        return model.material.density * _phase_sum(grid + off, w, k)

    if isinstance(model, Cylinder):
        ss, ws = _leggauss(n, 0.0, model.radius)
        zs, wz = _leggauss(n, -0.5 * model.height, 0.5 * model.height)
        nphi = 2 * n
        phis = 2.0 * np.pi * np.arange(nphi) / nphi
        wphi = 2.0 * np.pi / nphi
        x = ss[:, None, None] * np.cos(phis)[None, :, None] * np.ones(n)[None, None, :]
        y = ss[:, None, None] * np.sin(phis)[None, :, None] * np.ones(n)[None, None, :]
        z = np.ones(n)[:, None, None] * np.ones(nphi)[None, :, None] * zs[None, None, :]
        grid = np.stack([x, y, z], axis=-1).reshape(-1, 3)
        w = (
            (ws * ss)[:, None, None] * wphi * np.ones(nphi)[None, :, None]
            * wz[None, None, :]
        ).ravel()
        return model.material.density * _phase_sum(grid + off, w, k)

    raise TypeError(f"no oracle for {model!r}")


def random_material(rng) -> Material:
    return Material("m", float(rng.uniform(100.0, 20000.0)))


def random_model(rng, r_c=R_C, with_offset=True):
    """A random mass model with dimensions within a few r_c."""
    offset = (
        tuple(rng.uniform(-2.0 * r_c, 2.0 * r_c, 3)) if with_offset else (0.0, 0.0, 0.0)
    )
    kind = rng.integers(0, 5)
    dim = lambda: float(rng.uniform(0.2, 5.0) * r_c)
    if kind == 0:
        return PointMass(
            float(rng.uniform(1e-12, 1e-6)),
            tuple(rng.uniform(-r_c, r_c, 3)),
            offset,
        )
    if kind == 1:
        return Cuboid(dim(), dim(), dim(), random_material(rng), offset)
    if kind == 2:
        return Sphere(dim(), random_material(rng), offset)
    if kind == 3:
        return Cylinder(dim(), dim(), random_material(rng), offset)
    n_layers = int(rng.integers(1, 7))
    layers = tuple(
        Layer(random_material(rng), float(rng.uniform(0.1, 1.5) * r_c))
        for _ in range(n_layers)
    )
    return LayeredStack(dim(), dim(), layers, offset)


def random_k(rng, r_c=R_C, n=1):
    """Wavevectors with |k| * r_c <= 8, uniform in magnitude and direction."""
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    mag = rng.uniform(0.0, 8.0 / r_c, size=(n, 1))
    k = direction * mag
    return k[0] if n == 1 else k
