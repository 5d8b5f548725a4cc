"""
Command implementations: build, angles, embed, reifenberg, report.

Each command reads a validated RunConfig, writes its artifacts through
ReportStorage and returns the CLI exit code. Commands after `build`
rebuild the deterministic profile and family from the config and load the
meshed cone from the run directory.
"""
import logging
from dataclasses import dataclass

import numpy as np

from app import __version__
from app.core.errors import MissingArtifactError
from app.schemas.cone import AngleSummary
from app.schemas.embedding import EmbeddingSummary
from app.schemas.flow import ScheduleEntry
from app.schemas.reifenberg import ClassificationRow, Verdict
from app.schemas.run import Manifest, RunConfig
from app.services.cone_space import (
    ConeSpace,
    angle_trace,
    attainment,
    levels_in_range,
    mesh_cone,
    oscillation,
)
from app.services.curvature import ricci_spot_check
from app.services.embedding import (
    build_gram,
    check_far_pair_bound,
    check_upper_bound,
    contraction_volume_ratio,
    default_subset,
    distortion,
    near_pair_lower_estimate,
    project,
)
from app.services.holder_drift import HolderTestMetric, holder_angle_drift
from app.services.mesh_builders import (
    SphereMesh,
    flat_lattice_space,
    flat_torus_space,
    sphere_graph_space,
    sphere_mesh,
)
from app.services.metric_core import FiniteMetricSpace
from app.services.reifenberg import reifenberg_classify, sample_net, sharp_cone_space, uniform_profile
from app.services.report_storage import ReportStorage, config_hash
from app.services.sphere_flow import (
    DiffeoFamily,
    build_pair_schedule,
    build_schedule,
    identity_family,
    pullback_distance,
)
from app.services.warp_profile import WarpProfile, default_profile, flat_profile

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INCONCLUSIVE = 4

CONE_FILE = "cone.npz"
MANIFEST_FILE = "manifest.json"
SCHEDULE_COLUMNS = [
    "level", "pair_i", "pair_j", "theta", "eps",
    "interval_start", "interval_end", "midpoint", "achieved", "error",
]


class MissingBuild(MissingArtifactError):
    """The run directory holds no cone built from this config."""
    pass


@dataclass
class Geometry:
    """Profile, family and the (snapped) fixed pair for one config."""

    profile: WarpProfile
    family: DiffeoFamily
    y: np.ndarray
    z: np.ndarray
    entries: list


def storage_for(config: RunConfig, force: bool = False) -> ReportStorage:
    return ReportStorage(config.output_dir, config_hash(config), force=force)


# ============================================================
# Geometry
# ============================================================


def build_geometry(config: RunConfig) -> Geometry:
    """Deterministic profile and family for the config; y and z snapped to mesh vertices."""
    mesh = sphere_mesh(config.cone.sphere_res)
    sched = config.schedule
    y = mesh.vertices[mesh.nearest_vertex(np.asarray(sched.y, dtype=float))]
    z = mesh.vertices[mesh.nearest_vertex(np.asarray(sched.z, dtype=float))]

    if config.cone.flat:
        return Geometry(profile=flat_profile(), family=identity_family(), y=y, z=z, entries=[])

    profile = default_profile(config.cone.h_inf, config.cone.freeze_radius)
    if sched.mode == "covering":
        family, entries, _, _ = build_schedule(
            sched.levels, sched.theta_grid, sample_count=sched.sample_count, origin=sched.origin
        )
        return Geometry(profile=profile, family=family, y=y, z=z, entries=entries)

    family = build_pair_schedule(
        y, z, sched.targets, sched.levels, origin=sched.origin, first_level=sched.first_level
    )
    entries = []
    for segment in family.segments:
        mid = family.midpoint(segment)
        achieved = pullback_distance(family, mid, y, z)
        entries.append(ScheduleEntry(
            level=segment.level,
            pair=(0, 1),
            theta=segment.target,
            eps=segment.field.eps,
            interval=family.interval(segment),
            midpoint=mid,
            achieved=achieved,
            error=abs(achieved - segment.target),
        ))
    return Geometry(profile=profile, family=family, y=y, z=z, entries=entries)


def load_cone(config: RunConfig, storage: ReportStorage) -> tuple[ConeSpace, Geometry]:
    """
    Rebuild the cone persisted by cmd_build.

    Raises:
        MissingBuild: if no cone exists or it was built from another config
    """
    if not storage.exists(CONE_FILE):
        raise MissingBuild(f"no {CONE_FILE} under {storage.root}; run `build` first")
    if storage.stored_hash(CONE_FILE) != storage.config_hash:
        raise MissingBuild(f"{storage.path(CONE_FILE)} was built from a different config")
    data = storage.read_npz(CONE_FILE)
    geometry = build_geometry(config)
    mesh = SphereMesh(
        vertices=data["vertices"],
        triangles=data["triangles"],
        edges=data["mesh_edges"],
        second_ring=data["second_ring"],
    )
    cone = ConeSpace(
        profile=geometry.profile,
        family=geometry.family,
        mesh=mesh,
        radii=data["radii"],
        shell_images=data["shell_images"],
        edges=data["edges"],
        lengths=data["lengths"],
        radial_spacing=str(data["radial_spacing"]),
    )
    return cone, geometry


# ============================================================
# Commands
# ============================================================


def cmd_build(config: RunConfig, force: bool = False) -> int:
    """Mesh the cone and persist it with the schedule and a provenance manifest."""
    storage = storage_for(config, force)
    geometry = build_geometry(config)
    c = config.cone
    cone = mesh_cone(
        geometry.profile,
        geometry.family,
        r_min=c.r_min,
        r_max=c.r_max,
        shells=c.shells,
        sphere_res=c.sphere_res,
        radial_spacing=c.radial_spacing,
        shell_window=c.shell_window,
    )
    artifacts = [
        storage.write_npz(
            CONE_FILE,
            radii=cone.radii,
            shell_images=cone.shell_images,
            edges=cone.edges,
            lengths=cone.lengths,
            vertices=cone.mesh.vertices,
            triangles=cone.mesh.triangles,
            mesh_edges=cone.mesh.edges,
            second_ring=cone.mesh.second_ring,
            radial_spacing=np.array(cone.radial_spacing),
        ),
        storage.write_models_csv(
            "schedule.csv",
            geometry.entries,
            SCHEDULE_COLUMNS,
        ),
        storage.write_json("cone_summary.json", cone.summary()),
    ]
    if c.ricci_samples and cone.reference == "warped":
        ricci = ricci_spot_check(
            geometry.profile, geometry.family, c.r_min, c.r_max,
            samples=c.ricci_samples, seed=config.seed,
        )
        artifacts.append(storage.write_json("ricci.json", ricci))
        artifacts.append(
            storage.write_models_csv(
                "ricci.csv", ricci.points, ["r", "theta", "phi", "min_eigenvalue", "max_eigenvalue"]
            )
        )

    manifest = Manifest(
        config_hash=storage.config_hash,
        version=__version__,
        command="build",
        reference=cone.reference,
        points=cone.size,
        segments=len(geometry.family.segments),
        config=config,
        artifacts=[p.name for p in artifacts],
    )
    storage.write_json(MANIFEST_FILE, manifest)
    logger.info("build: %s cone with %d points, reference %s", config.name, cone.size, cone.reference)
    return EXIT_OK


def cmd_angles(config: RunConfig, force: bool = False) -> int:
    """Angle trace of the fixed pair at the tip, target attainment and optional Holder drifts."""
    storage = storage_for(config, force)
    cone, geometry = load_cone(config, storage)
    trace = angle_trace(cone, geometry.y, geometry.z)
    targets = [] if cone.reference == "flat" else config.schedule.targets
    levels = levels_in_range(cone)
    summary = AngleSummary(
        rows=len(trace),
        oscillation_mesh=oscillation(trace, "angle_mesh"),
        oscillation_chord=oscillation(trace, "angle_chord"),
        attainment=[
            item
            for column in config.angles.columns
            for item in attainment(trace, targets, tol=config.angles.tol, column=column, levels=levels)
        ],
        levels_in_range=levels,
    )
    storage.write_models_csv(
        "angles.csv", trace, ["t", "s", "angle_mesh", "angle_chord", "active_target", "level"]
    )
    storage.write_json("angle_summary.json", summary)

    if config.angles.holder_betas:
        drifts = [
            holder_angle_drift(HolderTestMetric(beta=beta), [1.0, 0.0], [0.0, 1.0])
            for beta in config.angles.holder_betas
        ]
        storage.write_json("holder_drift.json", drifts)
    for item in summary.attainment:
        logger.info(
            "target %.3f (%s) attained at %d radii, missing levels %s",
            item.target, item.column, len(item.hits), item.missing_levels,
        )
    return EXIT_OK


def _embed_space(config: RunConfig, storage: ReportStorage) -> FiniteMetricSpace:
    e = config.embed
    if e.space == "torus":
        return flat_torus_space(e.per_axis)
    if e.space == "sphere":
        return sphere_graph_space(e.sphere_points)
    cone, _ = load_cone(config, storage)
    return cone.to_metric_space()


def cmd_embed(config: RunConfig, force: bool = False) -> int:
    """Lipschitz bounds, distortion and spectral projection of x -> rho_x."""
    storage = storage_for(config, force)
    e = config.embed
    space = _embed_space(config, storage)
    gram = build_gram(space, e.r, truncation=e.truncation)
    subset = default_subset(gram)
    coords, projection = project(gram, energy=e.energy, subset=subset)

    near_pairs = []
    ratios = []
    if space.has_geodesics and len(subset):
        rng = np.random.default_rng(config.seed)
        x = int(subset[0])
        candidates = [int(v) for v in subset if 0.0 < space.dist[x, v] <= e.r]
        picks = rng.permutation(len(candidates))[: e.near_pairs]
        near_pairs = [near_pair_lower_estimate(gram, x, candidates[k]) for k in sorted(picks)]
        ratios = [contraction_volume_ratio(space, x, s, e.r) for s in (0.25, 0.5, 0.75)]

    summary = EmbeddingSummary(
        space=space.name,
        points=space.size,
        r=e.r,
        truncation=gram.truncation,
        interior=len(subset),
        upper=check_upper_bound(gram),
        far_pair=check_far_pair_bound(gram),
        distortion=distortion(gram, subset),
        projection=projection,
        near_pairs=near_pairs,
        contraction_ratios=ratios,
    )
    storage.write_json("embedding_summary.json", summary)
    storage.write_csv(
        "projection.csv",
        ["point"] + [f"c{k}" for k in range(coords.shape[1])],
        ([i] + row.tolist() for i, row in enumerate(coords)),
    )
    return EXIT_OK


def _reifenberg_space(config: RunConfig, storage: ReportStorage) -> tuple[FiniteMetricSpace, int, list[int]]:
    """(space, Euclidean dimension, default points)."""
    c = config.reifenberg
    if c.space == "sharp_cone":
        return sharp_cone_space(c.sharp_h_inf, c.rings, c.angular), 2, [0]
    if c.space == "flat":
        space = flat_lattice_space(c.dim, c.lattice_per_axis, c.lattice_spacing)
        return space, c.dim, [(space.size - 1) // 2]
    cone, _ = load_cone(config, storage)
    return cone.to_metric_space(), 3, [0]


def cmd_reifenberg(config: RunConfig, force: bool = False) -> int:
    """Classify points at (eps, r); exit 4 when every verdict is INCONCLUSIVE."""
    storage = storage_for(config, force)
    c = config.reifenberg
    space, dim, default_points = _reifenberg_space(config, storage)
    points = c.points if c.points is not None else default_points
    for p in points:
        if not 0 <= p < space.size:
            raise ValueError(f"point {p} outside 0..{space.size - 1}")

    profiles = [
        reifenberg_classify(
            space, p, c.eps, c.r, scale_count=c.scale_count, euclid_dim=dim,
            reference_kind=c.reference_kind, seed=config.seed,
        )
        for p in points
    ]
    storage.write_json("reifenberg_profiles.json", profiles)
    rows = [ClassificationRow(point=p.point, eps=p.eps, r=p.r, verdict=p.verdict) for p in profiles]
    storage.write_csv(
        "classification.csv",
        ["point", "eps", "r", "verdict"],
        ([row.point, row.eps, row.r, row.verdict.value] for row in rows),
    )
    if c.eps_grid and c.r_grid:
        net = points if c.points is not None else sample_net(
            space, c.net_points, margin=max(c.r_grid) / 2.0, seed_point=default_points[0]
        )
        table, _ = uniform_profile(
            space, c.eps_grid, c.r_grid, net, euclid_dim=dim,
            scale_count=c.scale_count, reference_kind=c.reference_kind, seed=config.seed,
        )
        storage.write_json("uniform_profile.json", table)

    if profiles and all(p.verdict == Verdict.INCONCLUSIVE for p in profiles):
        logger.warning("every Reifenberg verdict is INCONCLUSIVE")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


REPORT_SOURCES = [
    "manifest.json",
    "cone_summary.json",
    "ricci.json",
    "angle_summary.json",
    "holder_drift.json",
    "embedding_summary.json",
    "reifenberg_profiles.json",
    "uniform_profile.json",
]


def cmd_report(config: RunConfig, force: bool = False) -> int:
    """Collect existing artifacts of this config into summary.json."""
    storage = storage_for(config, force)
    collected: dict = {}
    stale = []
    for name in REPORT_SOURCES:
        if not storage.exists(name):
            continue
        if storage.stored_hash(name) != storage.config_hash:
            stale.append(name)
            continue
        collected[name.removesuffix(".json")] = storage.read_json(name)
    if stale:
        logger.warning("ignoring artifacts from other configs: %s", ", ".join(stale))
    if not collected:
        raise MissingArtifactError(f"no artifacts of this config under {storage.root}")

    verdicts = [p["verdict"] for p in collected.get("reifenberg_profiles", [])]
    counts = {v.value: verdicts.count(v.value) for v in Verdict}
    storage.write_json("summary.json", {
        "name": config.name,
        "version": __version__,
        "artifacts": sorted(collected),
        "verdict_counts": counts,
        "reports": collected,
    })
    if verdicts and all(v == Verdict.INCONCLUSIVE.value for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "angles": cmd_angles,
    "embed": cmd_embed,
    "reifenberg": cmd_reifenberg,
    "report": cmd_report,
}


def run_command(name: str, config: RunConfig, force: bool = False) -> int:
    if name not in COMMANDS:
        raise ValueError(f"unknown command {name!r}")
    logger.info("running %s for config %s", name, config.name)
    return COMMANDS[name](config, force=force)
