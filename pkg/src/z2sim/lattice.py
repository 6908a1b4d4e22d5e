"""Triangular-plaquette lattices with Z2 link variables.

A lattice is a set of triangular plaquettes whose corners sit on vertices
(super-sites).  Each plaquette carries three private matter sites, one per
corner, so a vertex shared by several plaquettes hosts a cluster of matter
sites.  A link joins two vertices and is shared by one plaquette (boundary
link) or two (double link).

Labelling scheme, fixed at construction time:
  plaquette p owns matter sites 3p, 3p+1, 3p+2 listed counterclockwise;
  plaquette.links[j] joins plaquette.vertices[j] and vertices[(j+1) % 3];
  link ids are dense in order of first appearance while scanning plaquettes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Plaquette:
    index: int
    vertices: tuple[int, int, int]   # super-site ids, counterclockwise
    sites: tuple[int, int, int]      # matter site ids, sites[j] at vertices[j]
    links: tuple[int, int, int]      # links[j] joins vertices[j], vertices[j+1]


@dataclass(frozen=True)
class Link:
    index: int
    vertices: tuple[int, int]
    plaquettes: tuple[int, ...]
    # matter sites directly attached to the link, grouped by the vertex
    # (side) they sit on; aligned with `vertices`
    attached: tuple[tuple[int, ...], tuple[int, ...]]

    @property
    def is_double(self) -> bool:
        return len(self.plaquettes) == 2


@dataclass(frozen=True)
class SuperSite:
    index: int
    position: tuple[float, float]
    members: tuple[int, ...]   # matter site ids at this vertex
    links: tuple[int, ...]     # incident link ids

    @property
    def n_plaquettes(self) -> int:
        # each plaquette touching the vertex contributes exactly one member
        return len(self.members)


@dataclass(frozen=True)
class DualLink:
    index: int                 # equals the direct link index (bijection)
    dual_sites: tuple[int, ...]  # one entry: boundary (free end), two: interior

    @property
    def is_boundary(self) -> bool:
        return len(self.dual_sites) == 1


@dataclass(frozen=True)
class DualGeometry:
    """Honeycomb-type dual: one dual site per plaquette, one dual link per link."""

    n_sites: int
    dual_links: tuple[DualLink, ...]

    def links_at(self, dual_site: int) -> list[int]:
        return [dl.index for dl in self.dual_links if dual_site in dl.dual_sites]


class LatticeGeometry:
    """Immutable triangular-plaquette geometry built from vertex triples."""

    def __init__(self, vertex_positions, plaquette_vertices):
        positions = [tuple(map(float, p)) for p in vertex_positions]
        n_vertices = len(positions)

        plaquettes: list[Plaquette] = []
        link_index: dict[tuple[int, int], int] = {}
        link_plaquettes: dict[int, list[int]] = {}
        link_vertices: list[tuple[int, int]] = []

        for p, verts in enumerate(plaquette_vertices):
            verts = tuple(int(v) for v in verts)
            if len(set(verts)) != 3:
                raise ValueError(f"plaquette {p} needs 3 distinct vertices, got {verts}")
            verts = _counterclockwise(verts, positions)
            sites = (3 * p, 3 * p + 1, 3 * p + 2)
            links = []
            for j in range(3):
                key = tuple(sorted((verts[j], verts[(j + 1) % 3])))
                if key not in link_index:
                    link_index[key] = len(link_vertices)
                    link_vertices.append(key)
                    link_plaquettes[link_index[key]] = []
                links.append(link_index[key])
                link_plaquettes[link_index[key]].append(p)
            plaquettes.append(Plaquette(p, verts, sites, tuple(links)))

        site_vertex = {}
        for plq in plaquettes:
            for j in range(3):
                site_vertex[plq.sites[j]] = plq.vertices[j]

        links: list[Link] = []
        for l, (va, vb) in enumerate(link_vertices):
            plqs = tuple(link_plaquettes[l])
            side_a, side_b = [], []
            for p in plqs:
                plq = plaquettes[p]
                for j in range(3):
                    if plq.links[j] != l:
                        continue
                    u, v = plq.vertices[j], plq.vertices[(j + 1) % 3]
                    su, sv = plq.sites[j], plq.sites[(j + 1) % 3]
                    if u == va:
                        side_a.append(su)
                        side_b.append(sv)
                    else:
                        side_a.append(sv)
                        side_b.append(su)
            links.append(Link(l, (va, vb), plqs, (tuple(sorted(side_a)), tuple(sorted(side_b)))))

        super_sites: list[SuperSite] = []
        for v in range(n_vertices):
            members = tuple(s for s in sorted(site_vertex) if site_vertex[s] == v)
            incident = tuple(l.index for l in links if v in l.vertices)
            super_sites.append(SuperSite(v, positions[v], members, incident))

        self.plaquettes: tuple[Plaquette, ...] = tuple(plaquettes)
        self.links: tuple[Link, ...] = tuple(links)
        self.super_sites: tuple[SuperSite, ...] = tuple(super_sites)
        self._site_vertex = site_vertex
        self._positions = positions

    # -- basic counts -------------------------------------------------------
    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_sites(self) -> int:
        return 3 * len(self.plaquettes)

    @property
    def matter_sites(self) -> list[int]:
        return list(range(self.n_sites))

    def site_plaquette(self, site: int) -> int:
        return site // 3

    def site_vertex(self, site: int) -> int:
        return self._site_vertex[site]

    def double_links(self) -> list[int]:
        return [l.index for l in self.links if l.is_double]

    def boundary_links(self) -> list[int]:
        return [l.index for l in self.links if not l.is_double]

    def grown_sector(self) -> dict[int, int]:
        """Gauss eigenvalue (-1)**N_i^P per super-site, the sector the growing
        scheme prepares."""
        return {v.index: -1 if v.n_plaquettes % 2 else 1 for v in self.super_sites}

    # -- dual lattice -------------------------------------------------------
    def dual(self) -> DualGeometry:
        dls = tuple(DualLink(l.index, l.plaquettes) for l in self.links)
        return DualGeometry(self.n_plaquettes, dls)

    # -- export -------------------------------------------------------------
    def describe(self) -> str:
        """Adjacency lists as plain text, for debugging and file dumps."""
        out = [f"plaquettes {self.n_plaquettes} links {self.n_links} matter_sites {self.n_sites}"]
        for p in self.plaquettes:
            out.append(f"plaquette {p.index}: vertices {list(p.vertices)} "
                       f"sites {list(p.sites)} links {list(p.links)}")
        for l in self.links:
            out.append(f"link {l.index}: vertices {list(l.vertices)} "
                       f"side_sites {list(l.attached[0])} | {list(l.attached[1])} "
                       f"double {l.is_double}")
        for v in self.super_sites:
            out.append(f"super_site {v.index}: members {list(v.members)} "
                       f"links {list(v.links)} n_plaquettes {v.n_plaquettes}")
        return "\n".join(out) + "\n"


def _counterclockwise(verts, positions):
    (x0, y0), (x1, y1), (x2, y2) = (positions[v] for v in verts)
    area2 = x0 * (y1 - y2) + x1 * (y2 - y0) + x2 * (y0 - y1)
    if area2 < 0:
        return (verts[0], verts[2], verts[1])
    return verts


def chain_of_plaquettes(n: int, orientation_pattern: str = "up") -> LatticeGeometry:
    """Strip of n triangles, consecutive ones glued along a double link.

    Vertex k sits at (k/2, (k % 2) * sqrt(3)/2); plaquette p uses vertices
    (p, p+1, p+2).  `orientation_pattern` flips the strip vertically, which
    only changes stored coordinates, not the combinatorics.
    """
    if n < 1:
        raise ValueError("need at least one plaquette")
    if orientation_pattern not in ("up", "down"):
        raise ValueError(f"unknown orientation_pattern {orientation_pattern!r}")
    sign = 1.0 if orientation_pattern == "up" else -1.0
    h = sign * math.sqrt(3.0) / 2.0
    positions = [(0.5 * k, (k % 2) * h) for k in range(n + 2)]
    triples = [(p, p + 1, p + 2) for p in range(n)]
    return LatticeGeometry(positions, triples)


PRESETS = {"tri1": 1, "tri2": 2, "tri3": 3}


def preset(name: str) -> LatticeGeometry:
    if name not in PRESETS:
        raise ValueError(f"unknown geometry preset {name!r}; have {sorted(PRESETS)}")
    return chain_of_plaquettes(PRESETS[name])
