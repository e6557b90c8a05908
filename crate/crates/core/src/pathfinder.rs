//! Path search.
//!
//! Every RIS element is illuminated directly by the transmitter. From each
//! illuminated element, paths to the receiver are the direct segment plus
//! specular chains over up to K reflective surfaces, constructed with the
//! image method. Chains are first checked from the panel center and only
//! the surviving surface sequences are tried per element.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use crate::antennas::Antenna;
use crate::error::Result;
use crate::geometry::{angles_in_frame, mirror_point, ray_rect_intersect, segment_crosses, Rect, Vec3};
use crate::propagation::{
    combined_element_field, field_at_rx, fresnel_reflect, received_power, ElementHop, FieldPhasor,
    PolarizationMode, GRAZING_TOLERANCE,
};
use crate::antennas::tx_launch_field;
use crate::scene::{Scene, SolverConfig, Surface};

/// Ordered reflective surface ids, without immediate repeats.
///
/// Sequences order by length first, then lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SurfaceSequence(pub Vec<usize>);

impl SurfaceSequence {
    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_valid(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }
}

impl Ord for SurfaceSequence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for SurfaceSequence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SurfaceSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathSource {
    /// Direct transmitter to receiver path.
    LineOfSight,
    Element { panel: usize, element: usize },
}

/// A validated polyline from the transmitter to the receiver.
///
/// `points` is `[TX, RX]` for the line of sight and
/// `[TX, element, bounces.., RX]` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationPath {
    pub source: PathSource,
    pub sequence: SurfaceSequence,
    pub points: Vec<Vec3>,
}

impl PropagationPath {
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.source
            .cmp(&other.source)
            .then_with(|| self.sequence.cmp(&other.sequence))
    }

    pub fn hop_lengths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].distance(w[1])).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.hop_lengths().iter().sum()
    }

    /// Unfolded length after the RIS, or the full length for the line of sight.
    pub fn post_ris_length(&self) -> f64 {
        let hops = self.hop_lengths();
        match self.source {
            PathSource::LineOfSight => hops.iter().sum(),
            PathSource::Element { .. } => hops[1..].iter().sum(),
        }
    }

    pub fn bounce_points(&self) -> &[Vec3] {
        match self.source {
            PathSource::LineOfSight => &[],
            PathSource::Element { .. } => &self.points[2..self.points.len() - 1],
        }
    }

    pub fn rx(&self) -> Vec3 {
        *self.points.last().expect("paths have at least two points")
    }
}

/// All sequences of length `0..=max_order` over `reflective` without
/// immediate repeats, in length-then-lexicographic order.
pub fn enumerate_sequences(reflective: &[usize], max_order: usize) -> Vec<SurfaceSequence> {
    let mut ids = reflective.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut all = vec![SurfaceSequence::default()];
    let mut level = vec![Vec::<usize>::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for seq in &level {
            for &id in &ids {
                if seq.last() != Some(&id) {
                    let mut s = seq.clone();
                    s.push(id);
                    next.push(s);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned().map(SurfaceSequence));
        level = next;
    }
    all
}

/// Bounce points of the specular chain from `start` over `seq` to `end`.
///
/// `end` is mirrored across the planes in reverse order; walking forward
/// from `start`, each image is aimed at and the ray must hit the front face
/// of the corresponding finite rectangle before reaching the image.
pub fn image_method_chain(
    start: Vec3,
    end: Vec3,
    seq: &[usize],
    surfaces: &[Surface],
) -> Option<Vec<Vec3>> {
    let rects = seq
        .iter()
        .map(|&id| surfaces.get(id).map(|s| &s.rect))
        .collect::<Option<Vec<&Rect>>>()?;
    let mut images = vec![end; rects.len()];
    let mut image = end;
    for (k, rect) in rects.iter().enumerate().rev() {
        image = mirror_point(image, rect);
        images[k] = image;
    }
    let mut p = start;
    let mut bounces = Vec::with_capacity(rects.len());
    for (rect, target) in rects.iter().zip(&images) {
        let delta = *target - p;
        let length = delta.norm();
        let dir = delta.normalized()?;
        if rect.signed_distance(p) <= 0.0 || dir.dot(rect.normal()) > -GRAZING_TOLERANCE {
            return None;
        }
        let hit = ray_rect_intersect(p, dir, rect)?;
        if hit.distance >= length {
            return None;
        }
        p = hit.point;
        bounces.push(p);
    }
    Some(bounces)
}

/// Occluders with their blocking ids: surfaces keep their index, panel `p`
/// gets `surfaces.len() + p`.
#[derive(Clone, Debug)]
struct Obstacles {
    rects: Vec<(usize, Rect)>,
    surface_count: usize,
}

impl Obstacles {
    fn of(scene: &Scene) -> Self {
        let surface_count = scene.surfaces.len();
        let mut rects: Vec<(usize, Rect)> = scene
            .surfaces
            .iter()
            .enumerate()
            .filter(|(_, s)| s.blocking)
            .map(|(i, s)| (i, s.rect))
            .collect();
        rects.extend(
            scene
                .panels
                .iter()
                .enumerate()
                .map(|(p, panel)| (surface_count + p, panel.bounds)),
        );
        Obstacles { rects, surface_count }
    }

    fn panel_id(&self, panel: usize) -> usize {
        self.surface_count + panel
    }

    fn blocked(&self, a: Vec3, b: Vec3, excluded: &[usize]) -> bool {
        self.rects
            .iter()
            .any(|(id, rect)| !excluded.contains(id) && segment_crosses(a, b, rect))
    }
}

/// Points `[start, bounces.., rx]` of a valid chain leaving panel `panel` at
/// `start`, or `None`. Each hop ignores its own end surfaces; the first hop
/// also ignores the panel.
fn ris_chain(
    scene: &Scene,
    obstacles: &Obstacles,
    panel: usize,
    start: Vec3,
    rx: Vec3,
    seq: &[usize],
) -> Option<Vec<Vec3>> {
    let bounces = image_method_chain(start, rx, seq, &scene.surfaces)?;
    let mut points = Vec::with_capacity(seq.len() + 2);
    points.push(start);
    points.extend(bounces);
    points.push(rx);
    if (points[1] - start).dot(scene.panels[panel].normal()) <= 0.0 {
        return None;
    }
    for h in 0..points.len() - 1 {
        let mut excluded = [usize::MAX; 2];
        excluded[0] = if h == 0 { obstacles.panel_id(panel) } else { seq[h - 1] };
        if h < seq.len() {
            excluded[1] = seq[h];
        }
        if obstacles.blocked(points[h], points[h + 1], &excluded) {
            return None;
        }
    }
    Some(points)
}

/// Whether the chain from the center of panel `panel` over `seq` to `rx`
/// exists and is unblocked.
pub fn prune_by_center(scene: &Scene, panel: usize, rx: Vec3, seq: &[usize]) -> bool {
    let obstacles = Obstacles::of(scene);
    ris_chain(scene, &obstacles, panel, scene.panels[panel].center(), rx, seq).is_some()
}

/// Field and path count at one receiver position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointField {
    pub field: FieldPhasor,
    pub paths: usize,
}

/// Path search over a fixed scene, caching what does not depend on the
/// receiver position.
#[derive(Clone, Debug)]
pub struct Tracer<'a> {
    scene: &'a Scene,
    options: SolverConfig,
    obstacles: Obstacles,
    sequences: Vec<SurfaceSequence>,
    illuminated: Vec<Vec<bool>>,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, options: SolverConfig) -> Self {
        let sequences = enumerate_sequences(&scene.reflective_ids(), options.max_order);
        Self::with_sequences(scene, options, sequences)
    }

    /// Uses `sequences` as given; results are sorted, so their order does not matter.
    pub fn with_sequences(
        scene: &'a Scene,
        options: SolverConfig,
        sequences: Vec<SurfaceSequence>,
    ) -> Self {
        let obstacles = Obstacles::of(scene);
        let tx = scene.tx.position();
        let illuminated = scene
            .panels
            .iter()
            .enumerate()
            .map(|(p, panel)| {
                let own = [obstacles.panel_id(p)];
                panel
                    .elements
                    .iter()
                    .map(|e| {
                        (tx - e.center).dot(panel.normal()) > 0.0
                            && !obstacles.blocked(tx, e.center, &own)
                    })
                    .collect()
            })
            .collect();
        Tracer {
            scene,
            options,
            obstacles,
            sequences,
            illuminated,
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn sequences(&self) -> &[SurfaceSequence] {
        &self.sequences
    }

    pub fn is_illuminated(&self, panel: usize, element: usize) -> bool {
        self.illuminated[panel][element]
    }

    /// All valid paths to `rx`, sorted by source then sequence.
    pub fn find_paths(&self, rx: Vec3) -> Vec<PropagationPath> {
        let scene = self.scene;
        let mut paths = Vec::new();
        let tx = scene.tx.position();
        if self.options.include_los && !self.obstacles.blocked(tx, rx, &[]) {
            paths.push(PropagationPath {
                source: PathSource::LineOfSight,
                sequence: SurfaceSequence::default(),
                points: vec![tx, rx],
            });
        }
        for (p, panel) in scene.panels.iter().enumerate() {
            let candidates: Vec<&SurfaceSequence> = self
                .sequences
                .iter()
                .filter(|s| {
                    !self.options.center_prune
                        || ris_chain(scene, &self.obstacles, p, panel.center(), rx, s.ids())
                            .is_some()
                })
                .collect();
            for (m, element) in panel.elements.iter().enumerate() {
                if !self.illuminated[p][m] {
                    continue;
                }
                for seq in &candidates {
                    if let Some(chain) =
                        ris_chain(scene, &self.obstacles, p, element.center, rx, seq.ids())
                    {
                        let mut points = Vec::with_capacity(chain.len() + 1);
                        points.push(tx);
                        points.extend(chain);
                        paths.push(PropagationPath {
                            source: PathSource::Element { panel: p, element: m },
                            sequence: (*seq).clone(),
                            points,
                        });
                    }
                }
            }
        }
        paths.sort_by(|a, b| a.cmp_key(b));
        paths
    }

    /// Coherent sum over all paths to `rx`.
    pub fn field_at(&self, rx: Vec3) -> Result<PointField> {
        let paths = self.find_paths(rx);
        let mut field = FieldPhasor::ZERO;
        for path in &paths {
            field += path_field(path, self.scene, &self.scene.rx, self.options.mode)?;
        }
        Ok(PointField {
            field,
            paths: paths.len(),
        })
    }
}

/// Convenience wrapper around [`Tracer::find_paths`].
pub fn find_paths(scene: &Scene, rx: Vec3, options: SolverConfig) -> Vec<PropagationPath> {
    Tracer::new(scene, options).find_paths(rx)
}

fn unit(a: Vec3, b: Vec3) -> Vec3 {
    (b - a) / a.distance(b)
}

/// Field delivered by one path. `rx` supplies the receiver orientation and
/// pattern; it is moved to the path's end point.
pub fn path_field(
    path: &PropagationPath,
    scene: &Scene,
    rx: &Antenna,
    mode: PolarizationMode,
) -> Result<FieldPhasor> {
    let rx = rx.moved_to(path.rx());
    let pts = &path.points;
    let last_dir = unit(pts[pts.len() - 2], pts[pts.len() - 1]);
    match path.source {
        PathSource::LineOfSight => {
            let e_t = tx_launch_field(&scene.tx, last_dir, mode)?;
            field_at_rx(e_t, path.total_length(), &rx, last_dir, &scene.radio, mode)
        }
        PathSource::Element { panel, element } => {
            let panel = &scene.panels[panel];
            let el = &panel.elements[element];
            let incoming = unit(pts[0], pts[1]);
            let outgoing = unit(pts[1], pts[2]);
            let hop = ElementHop {
                d_t: pts[0].distance(pts[1]),
                incoming,
                outgoing,
                theta_in: angles_in_frame(&el.frame, -incoming).1,
                theta_out: angles_in_frame(&el.frame, outgoing).1,
            };
            let e_t = tx_launch_field(&scene.tx, incoming, mode)?;
            let mut e = combined_element_field(
                e_t,
                el,
                panel.element_gain,
                &panel.element_pattern,
                &hop,
                scene.radio.wavelength,
                mode,
            )?;
            for (k, &id) in path.sequence.ids().iter().enumerate() {
                let surface = &scene.surfaces[id];
                let dir = unit(pts[k + 1], pts[k + 2]);
                e = fresnel_reflect(e, dir, &surface.rect, &surface.material, scene.radio.frequency, mode)?.0;
            }
            field_at_rx(e, path.post_ris_length(), &rx, last_dir, &scene.radio, mode)
        }
    }
}

/// Path dump header; columns are tab separated.
pub const PATH_DUMP_HEADER: &str =
    "# risrt paths v1\n# panel\telement\tsequence\tpoints_xyz_m\tlength_m\tpower_dbm";

/// One line per path: panel and element index (`-` for the line of sight),
/// `/`-joined surface ids (`-` if none), `;`-separated `x,y,z` points,
/// total length, and the power the path alone would deliver.
pub fn format_path_dump(
    paths: &[PropagationPath],
    scene: &Scene,
    mode: PolarizationMode,
) -> Result<String> {
    let mut out = String::from(PATH_DUMP_HEADER);
    out.push('\n');
    for path in paths {
        let (panel, element) = match path.source {
            PathSource::LineOfSight => ("-".to_string(), "-".to_string()),
            PathSource::Element { panel, element } => (panel.to_string(), element.to_string()),
        };
        let points: Vec<String> = path
            .points
            .iter()
            .map(|p| format!("{:.6},{:.6},{:.6}", p.x, p.y, p.z))
            .collect();
        let power = received_power(&path_field(path, scene, &scene.rx, mode)?).dbm;
        let _ = writeln!(
            out,
            "{panel}\t{element}\t{}\t{}\t{:.9}\t{:.6}",
            path.sequence,
            points.join(";"),
            path.total_length(),
            power
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::Frame;
    use crate::propagation::Material;
    use crate::scene::{facing_rect, presets};

    fn surface(center: Vec3, normal: Vec3, size: [f64; 2]) -> Surface {
        Surface {
            name: "s".into(),
            rect: facing_rect(center, normal, if normal.z.abs() > 0.5 { Vec3::X } else { Vec3::Z }, size).unwrap(),
            material: Material::metal(),
            reflective: true,
            blocking: true,
        }
    }

    fn brute_force(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..k {
            let mut next = vec![];
            for s in &frontier {
                for id in 0..n {
                    let mut t: Vec<usize> = s.clone();
                    t.push(id);
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        let mut out: Vec<Vec<usize>> = out
            .into_iter()
            .filter(|s| s.windows(2).all(|w| w[0] != w[1]))
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }

    #[test]
    fn sequence_enumeration_examples() {
        let seqs = enumerate_sequences(&[0, 1, 2], 2);
        assert_eq!(seqs.len(), 1 + 3 + 3 * 2);
        let ids: Vec<Vec<usize>> = seqs.iter().map(|s| s.0.clone()).collect();
        assert_eq!(ids, brute_force(3, 2));
        assert_eq!(enumerate_sequences(&[4, 7], 0), vec![SurfaceSequence::default()]);
        assert_eq!(enumerate_sequences(&[5], 2).len(), 2);
    }

    #[test]
    fn single_mirror_bounce() {
        let s = vec![surface(Vec3::ZERO, Vec3::Y, [100.0, 100.0])];
        let b = image_method_chain(Vec3::new(0.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0), &[0], &s).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0] - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(image_method_chain(Vec3::Y, Vec3::Y * 2.0, &[], &s).unwrap().is_empty());
    }

    #[test]
    fn double_bounce_between_parallel_mirrors() {
        let s = vec![
            surface(Vec3::ZERO, Vec3::Y, [100.0, 100.0]),
            surface(Vec3::new(0.0, 2.0, 0.0), -Vec3::Y, [100.0, 100.0]),
        ];
        let start = Vec3::new(0.0, 0.5, 0.0);
        let end = Vec3::new(3.0, 1.5, 0.0);
        let b = image_method_chain(start, end, &[0, 1], &s).unwrap();
        let length = start.distance(b[0]) + b[0].distance(b[1]) + b[1].distance(end);
        // end mirrored across y = 2, then y = 0: (3, -2.5, 0)
        assert!((length - 18f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn chain_misses_small_wall() {
        let s = vec![surface(Vec3::new(5.0, 0.0, 0.0), Vec3::Y, [0.2, 0.2])];
        assert!(image_method_chain(Vec3::new(0.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0), &[0], &s).is_none());
        // same endpoints with the wall under the midpoint
        let s = vec![surface(Vec3::new(1.0, 0.0, 0.0), Vec3::Y, [0.2, 0.2])];
        assert!(image_method_chain(Vec3::new(0.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0), &[0], &s).is_some());
    }

    #[test]
    fn chain_is_one_sided() {
        let s = vec![surface(Vec3::ZERO, -Vec3::Y, [100.0, 100.0])];
        assert!(image_method_chain(Vec3::new(0.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0), &[0], &s).is_none());
    }

    fn angle(a: Vec3, b: Vec3) -> f64 {
        a.dot(b).clamp(-1.0, 1.0).acos()
    }

    fn box_room() -> Vec<Surface> {
        vec![
            surface(Vec3::new(2.0, 0.0, 1.0), Vec3::Y, [4.0, 2.0]),
            surface(Vec3::new(2.0, 3.0, 1.0), -Vec3::Y, [4.0, 2.0]),
            surface(Vec3::new(4.0, 1.5, 1.0), -Vec3::X, [3.0, 2.0]),
            surface(Vec3::new(2.0, 1.5, 0.0), Vec3::Z, [3.0, 4.0]),
        ]
    }

    proptest! {
        #[test]
        fn specular_law_and_unfolding(
            sx in 0.1f64..3.9, sy in 0.1f64..2.9, sz in 0.1f64..1.9,
            ex in 0.1f64..3.9, ey in 0.1f64..2.9, ez in 0.1f64..1.9,
            seq in proptest::collection::vec(0usize..4, 0..4),
        ) {
            prop_assume!(seq.windows(2).all(|w| w[0] != w[1]));
            let s = box_room();
            let start = Vec3::new(sx, sy, sz);
            let end = Vec3::new(ex, ey, ez);
            if let Some(b) = image_method_chain(start, end, &seq, &s) {
                let mut pts = vec![start];
                pts.extend(b.iter().copied());
                pts.push(end);
                for (k, &id) in seq.iter().enumerate() {
                    let n = s[id].rect.normal();
                    let d_in = unit(pts[k], pts[k + 1]);
                    let d_out = unit(pts[k + 1], pts[k + 2]);
                    prop_assert!((angle(-d_in, n) - angle(d_out, n)).abs() < 1e-9);
                    prop_assert!(s[id].rect.signed_distance(pts[k + 1]).abs() < 1e-9);
                }
                let mut image = end;
                for &id in seq.iter().rev() {
                    image = mirror_point(image, &s[id].rect);
                }
                let length: f64 = pts.windows(2).map(|w| w[0].distance(w[1])).sum();
                prop_assert!((length - start.distance(image)).abs() < 1e-9);
            }
        }

        #[test]
        fn sequence_count(n in 0usize..6, k in 0usize..4) {
            let seqs = enumerate_sequences(&(0..n).collect::<Vec<_>>(), k);
            let mut expected = 1;
            for l in 1..=k {
                expected += n * (n.saturating_sub(1)).pow(l as u32 - 1);
            }
            prop_assert_eq!(seqs.len(), expected);
            prop_assert!(seqs.iter().all(SurfaceSequence::is_valid));
            prop_assert!(seqs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn anechoic_has_one_path_per_element() {
        let scene = presets::anechoic();
        let paths = find_paths(&scene, scene.rx_target(), scene.solver);
        assert_eq!(paths.len(), 127);
        assert!(paths.iter().all(|p| p.sequence.order() == 0 && p.points.len() == 3));
    }

    fn reflective_points() -> Vec<Vec3> {
        let mut pts = vec![];
        for i in 0..7 {
            for j in 0..10 {
                pts.push(Vec3::new(0.92 + 0.1 * i as f64, 0.02 + 0.1 * j as f64, 0.114));
            }
        }
        pts
    }

    #[test]
    fn reflective_scene_path_bounds() {
        let scene = presets::table1_reflective();
        let tracer = Tracer::new(&scene, scene.solver);
        assert_eq!(tracer.sequences().len(), 10);
        let mut max_reflected = 0;
        for rx in reflective_points() {
            let paths = tracer.find_paths(rx);
            let mut per_element = vec![0; 127];
            for p in &paths {
                if let PathSource::Element { element, .. } = p.source {
                    per_element[element] += 1;
                }
            }
            assert!(per_element.iter().all(|&c| c <= 10));
            let reflected = paths.iter().filter(|p| p.sequence.order() > 0).count();
            max_reflected = max_reflected.max(reflected);
        }
        assert!(max_reflected >= 2);
    }

    #[test]
    fn raising_k_keeps_paths() {
        let scene = presets::table1_reflective();
        let k0 = Tracer::new(&scene, SolverConfig { max_order: 0, ..scene.solver });
        let k2 = Tracer::new(&scene, scene.solver);
        for rx in reflective_points().into_iter().step_by(7) {
            let a = k0.find_paths(rx);
            let b = k2.find_paths(rx);
            for p in &a {
                assert!(b.contains(p));
            }
        }
    }

    #[test]
    fn paths_do_not_depend_on_sequence_order() {
        let scene = presets::table1_reflective();
        let forward = Tracer::new(&scene, scene.solver);
        let mut seqs = forward.sequences().to_vec();
        seqs.reverse();
        seqs.swap(1, 4);
        let shuffled = Tracer::with_sequences(&scene, scene.solver, seqs);
        for rx in reflective_points().into_iter().step_by(11) {
            assert_eq!(forward.find_paths(rx), shuffled.find_paths(rx));
        }
    }

    #[test]
    fn center_pruning_is_nearly_conservative_on_the_reflective_scene() {
        let scene = presets::table1_reflective();
        let pruned = Tracer::new(&scene, scene.solver);
        let full = Tracer::new(&scene, SolverConfig { center_prune: false, ..scene.solver });
        // a single-bounce path from an off-center element that the center chain misses
        let rx = Vec3::new(1.38, 0.04, 0.114);
        let (a, b) = (pruned.find_paths(rx), full.find_paths(rx));
        assert!(b.iter().any(|p| !a.contains(p) && p.sequence.order() == 1));
        let (mut kept, mut all) = (0, 0);
        for rx in reflective_points().into_iter().chain([rx]) {
            let (a, b) = (pruned.find_paths(rx), full.find_paths(rx));
            assert!(a.iter().all(|p| b.contains(p)));
            kept += a.len();
            all += b.len();
        }
        assert!(kept as f64 >= 0.99 * all as f64, "{kept} of {all}");
    }

    #[test]
    fn occluded_receiver_has_no_paths() {
        let mut scene = presets::anechoic();
        scene.surfaces.push(Surface {
            name: "screen".into(),
            rect: facing_rect(Vec3::new(0.5, 0.0, 0.5), -Vec3::X, Vec3::Z, [2.0, 2.0]).unwrap(),
            material: Material::metal(),
            reflective: false,
            blocking: true,
        });
        // TX sits beyond the screen too, so move it in front of it
        scene.tx = scene.tx.moved_to(Vec3::new(0.3, -0.3, 0.5));
        scene.tx.frame = Frame::from_z_and_up(scene.tx.position(), Vec3::new(-0.3, 0.3, 0.0), Vec3::Z).unwrap();
        let paths = find_paths(&scene, Vec3::new(1.2, 0.2, 0.2), scene.solver);
        assert!(paths.is_empty());
        assert_eq!(find_paths(&scene, Vec3::new(0.3, 0.2, 0.4), scene.solver).len(), 127);
    }

    #[test]
    fn center_prune_rejects_occluded_and_missed_walls() {
        let mut scene = presets::anechoic();
        // small wall far to the side: the mirror point misses it
        scene.surfaces.push(surface(Vec3::new(3.0, -1.0, 0.5), Vec3::Y, [0.1, 0.1]));
        let rx = Vec3::new(1.0, 0.3, 0.5);
        assert!(prune_by_center(&scene, 0, rx, &[]));
        assert!(!prune_by_center(&scene, 0, rx, &[0]));
        // big wall, then a screen between it and both endpoints
        scene.surfaces[0] = surface(Vec3::new(1.0, -1.0, 0.5), Vec3::Y, [4.0, 2.0]);
        assert!(prune_by_center(&scene, 0, rx, &[0]));
        scene.surfaces.push(Surface {
            reflective: false,
            ..surface(Vec3::new(1.0, -0.8, 0.5), Vec3::Y, [4.0, 2.0])
        });
        assert!(!prune_by_center(&scene, 0, rx, &[0]));
        // exhaustive check of the same verdict: some hop crosses the screen
        let b = image_method_chain(scene.panels[0].center(), rx, &[0], &scene.surfaces).unwrap();
        let screen = &scene.surfaces[1].rect;
        assert!(segment_crosses(scene.panels[0].center(), b[0], screen) || segment_crosses(b[0], rx, screen));
    }

    #[test]
    fn direct_path_field_matches_the_element_formula() {
        let scene = presets::anechoic();
        let mode = PolarizationMode::Scalar;
        let rx = scene.rx_target();
        let paths = find_paths(&scene, rx, scene.solver);
        let path = &paths[40];
        let el = &scene.panels[0].elements[40];
        let tx = scene.tx.position();
        let d_t = tx.distance(el.center);
        let d_r = el.center.distance(rx);
        let n = Vec3::X;
        let cos_in = (tx - el.center).dot(n) / d_t;
        let cos_out = (rx - el.center).dot(n) / d_r;
        let lambda = scene.radio.wavelength;
        let g = 4.0 * PI * 0.0066 * 0.0066 / (lambda * lambda);
        let boresight = unit(tx, el.center).dot(scene.tx.frame.z);
        let e_t = (2.0 * crate::antennas::ETA0 * 0.01 * scene.tx.gain * boresight.powf(scene.tx.gain / 2.0 - 1.0)).sqrt();
        let theta_r = unit(rx, el.center).dot(Vec3::Z).acos();
        let kh = PI / 2.0;
        let f_r = (((kh * theta_r.cos()).cos() - kh.cos()) / theta_r.sin()).powi(2);
        let expected = e_t
            * (g * cos_in * cos_out * 0.0066 * 0.0066 / (4.0 * PI)).sqrt()
            * 1.25
            / d_t
            * f_r.sqrt()
            * lambda
            / (4.0 * PI * d_r);
        let got = path_field(path, &scene, &scene.rx, mode).unwrap();
        assert!((got.norm() - expected).abs() < 1e-12 * expected);
        let phase = -2.0 * PI / lambda * (d_t + d_r);
        let dominant = got.0.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let diff = (dominant.arg() - phase).rem_euclid(2.0 * PI);
        assert!(diff.min(2.0 * PI - diff) < 1e-6 || (diff - PI).abs() < 1e-6);
    }

    fn one_wall_scene(wall_y: f64) -> Scene {
        let mut scene = presets::anechoic();
        scene.rx.pattern = crate::antennas::AntennaPattern::Isotropic;
        scene.surfaces.push(surface(Vec3::new(1.0, wall_y, 0.5), Vec3::Y, [4.0, 2.0]));
        scene
    }

    #[test]
    fn single_bounce_equals_unfolded_direct_path_times_r_s() {
        let scene = one_wall_scene(-1.5);
        let mode = PolarizationMode::Scalar;
        let options = SolverConfig { max_order: 1, mode, ..scene.solver };
        let rx = Vec3::new(1.2, 0.3, 0.3);
        let paths = find_paths(&scene, rx, options);
        let bounce = paths
            .iter()
            .find(|p| p.source == (PathSource::Element { panel: 0, element: 0 }) && p.sequence.order() == 1)
            .unwrap();
        let image = mirror_point(rx, &scene.surfaces[0].rect);
        let unfolded = PropagationPath {
            source: bounce.source,
            sequence: SurfaceSequence::default(),
            points: vec![bounce.points[0], bounce.points[1], image],
        };
        assert!((unfolded.total_length() - bounce.total_length()).abs() < 1e-9);
        let e_b = path_field(bounce, &scene, &scene.rx, mode).unwrap();
        let e_u = path_field(&unfolded, &scene, &scene.rx, mode).unwrap();
        let cos_i = unit(bounce.points[1], bounce.points[2]).dot(-Vec3::Y).abs();
        let eps_c = crate::propagation::complex_permittivity(&Material::metal(), scene.radio.frequency);
        let (r_s, _) = crate::propagation::fresnel_coefficients(cos_i, eps_c);
        assert!((r_s.norm() - 1.0).abs() < 1e-3);
        for (b, u) in e_b.0.iter().zip(e_u.0.iter()) {
            assert!((b - u * r_s).norm() < 1e-9 * e_u.norm());
        }
    }

    #[test]
    fn phase_follows_unfolded_length() {
        let mode = PolarizationMode::Scalar;
        let rx = Vec3::new(1.2, 0.3, 0.3);
        let reflected = |wall_y: f64| {
            let scene = one_wall_scene(wall_y);
            let options = SolverConfig { max_order: 1, mode, ..scene.solver };
            let path = find_paths(&scene, rx, options)
                .into_iter()
                .find(|p| p.sequence.order() == 1 && p.source == (PathSource::Element { panel: 0, element: 63 }))
                .unwrap();
            let e = path_field(&path, &scene, &scene.rx, mode).unwrap();
            (path.total_length(), e.0.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap().arg())
        };
        let lambda = presets::anechoic().radio.wavelength;
        let (l0, a0) = reflected(-1.5);
        let (l1, a1) = reflected(-1.5 - lambda / 2.0);
        let expected = (-(l1 - l0) * 2.0 * PI / lambda).rem_euclid(2.0 * PI);
        let got = (a1 - a0).rem_euclid(2.0 * PI);
        let diff = (got - expected).abs();
        assert!(diff.min(2.0 * PI - diff) < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn line_of_sight_path() {
        let mut scene = presets::anechoic();
        scene.panels.clear();
        let options = SolverConfig { include_los: true, ..scene.solver };
        let rx = Vec3::new(0.5, 0.0, 0.5);
        let paths = find_paths(&scene, rx, options);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].source, PathSource::LineOfSight);
        assert!((paths[0].total_length() - scene.tx.position().distance(rx)).abs() < 1e-12);
    }

    #[test]
    fn path_dump_lines() {
        let scene = presets::anechoic();
        let paths = find_paths(&scene, scene.rx_target(), scene.solver);
        let dump = format_path_dump(&paths, &scene, scene.solver.mode).unwrap();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 2 + 127);
        let cols: Vec<&str> = lines[2].split('\t').collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[1], "0");
        assert_eq!(cols[2], "-");
        assert_eq!(cols[3].split(';').count(), 3);
    }
}
