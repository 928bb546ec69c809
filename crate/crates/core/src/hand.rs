//! Three-finger Barrett-style hand closing against a GPIS.
//!
//! Palm frame: the palm is a disk of `palm_radius` in the z = 0 plane and the
//! fingers close over +z (the approach axis). Finger `i` lives in the vertical
//! plane at azimuth αᵢ; at zero joint angles it points along the tilted ray
//! `(sin τ cos α, sin τ sin α, cos τ)` starting at the mount `mount_radius`
//! out on that same ray. The proximal joint bends the finger inward; the
//! distal joint follows at `κ·θ` plus a breakaway offset.
//!
//! Actuated joints are `q = [spread, θ₁, θ₂, θ₃]`. Finger 1 sits at α = π,
//! fingers 2 and 3 at ±(`spread_base` + spread/2).

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{Isometry3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::gpis::GpisModel;

/// Assumed bound on |∇f| used when skipping samples and steps.
pub const LIPSCHITZ: f64 = 1.5;

#[derive(Debug, thiserror::Error)]
pub enum HandError {
    #[error("joint {joint} = {value} outside [{min}, {max}]")]
    JointLimit { joint: &'static str, value: f64, min: f64, max: f64 },
    #[error("initial pose collides (min f = {min_value:e})")]
    InitialCollision { min_value: f64 },
    #[error("invalid hand model: {0}")]
    InvalidModel(String),
    #[error("cannot read hand file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("hand file {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub min: f64,
    pub max: f64,
}

impl Limits {
    fn check(&self, joint: &'static str, value: f64) -> Result<(), HandError> {
        let tol = 1e-12;
        if value < self.min - tol || value > self.max + tol || !value.is_finite() {
            return Err(HandError::JointLimit { joint, value, min: self.min, max: self.max });
        }
        Ok(())
    }
}

/// Sample density on the link capsules and the palm disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingDensity {
    pub proximal_axial: usize,
    pub distal_axial: usize,
    pub ring: usize,
    pub palm_rings: usize,
    pub palm_ring_points: usize,
}

impl Default for SamplingDensity {
    fn default() -> Self {
        Self { proximal_axial: 8, distal_axial: 7, ring: 8, palm_rings: 2, palm_ring_points: 8 }
    }
}

/// Hand description, loadable from JSON. Every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HandModel {
    pub palm_radius: f64,
    pub mount_radius: f64,
    /// Outward tilt τ of the straight finger from the approach axis.
    pub mount_tilt: f64,
    pub finger_one_azimuth: f64,
    /// Azimuth of fingers 2 and 3 at zero spread.
    pub spread_base: f64,
    pub proximal_length: f64,
    pub distal_length: f64,
    pub capsule_radius: f64,
    pub spread: Limits,
    pub proximal: Limits,
    pub distal: Limits,
    /// κ in distal = κ·proximal + breakaway.
    pub breakaway_ratio: f64,
    /// Closing speed ratios for `[spread, θ₁, θ₂, θ₃]`.
    pub speeds: [f64; 4],
    /// Joint increment of the closing sweep (rad).
    pub step: f64,
    pub sampling: SamplingDensity,
}

impl Default for HandModel {
    fn default() -> Self {
        Self {
            palm_radius: 0.05,
            mount_radius: 0.04,
            mount_tilt: 0.7,
            finger_one_azimuth: PI,
            spread_base: 0.4,
            proximal_length: 0.07,
            distal_length: 0.056,
            capsule_radius: 0.01,
            spread: Limits { min: 0.0, max: PI },
            proximal: Limits { min: 0.0, max: 2.44 },
            distal: Limits { min: 0.0, max: 0.84 },
            breakaway_ratio: 1.0 / 3.0,
            speeds: [0.0, 1.0, 1.0, 1.0],
            step: 0.005,
            sampling: SamplingDensity::default(),
        }
    }
}

/// Contact threshold and penetration tolerance (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactParams {
    pub threshold: f64,
    pub penetration_tol: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { threshold: 0.005, penetration_tol: 0.002 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    /// `[spread, θ₁, θ₂, θ₃]`.
    pub q: [f64; 4],
    /// Extra distal rotation accumulated after the proximal joint stopped.
    pub breakaway: [f64; 3],
}

impl HandState {
    pub fn open(spread: f64) -> Self {
        Self { q: [spread, 0.0, 0.0, 0.0], breakaway: [0.0; 3] }
    }

    pub fn from_q(q: [f64; 4]) -> Self {
        Self { q, breakaway: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Palm,
    Proximal,
    Distal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Point3<f64>,
    /// Outward unit normal ∇f/|∇f| at `point`.
    pub normal: Vector3<f64>,
    pub link: LinkKind,
    /// `None` for the palm.
    pub finger: Option<usize>,
    /// f at `point`.
    pub value: f64,
    /// Preferred first friction-cone tangent (link axis projected onto the
    /// tangent plane); keeps the cone discretization attached to the hand.
    pub tangent: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPose {
    pub start: Point3<f64>,
    pub end: Point3<f64>,
    /// Frame at `start` with local z along the link.
    pub frame: Isometry3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub palm: Isometry3<f64>,
    /// `links[finger] = [proximal, distal]`.
    pub links: [[LinkPose; 2]; 3],
    /// Distal link end points.
    pub fingertips: [Point3<f64>; 3],
}

impl Kinematics {
    /// Outermost capsule points beyond the fingertips.
    pub fn tip_surface_points(&self, capsule_radius: f64) -> [Point3<f64>; 3] {
        std::array::from_fn(|i| {
            let l = &self.links[i][1];
            l.end + (l.end - l.start).normalize() * capsule_radius
        })
    }

    /// The 7 rigid bodies: palm, then proximal/distal per finger.
    pub fn body_frames(&self) -> Vec<Isometry3<f64>> {
        let mut v = vec![self.palm];
        for f in &self.links {
            v.push(f[0].frame);
            v.push(f[1].frame);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub colliding: bool,
    /// Lower bound on min f over all samples (exact where it matters).
    pub min_value: f64,
    pub worst_penetration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub state: HandState,
    pub contacts: Vec<Contact>,
}

/// Result of probing one capsule or the palm.
#[derive(Debug, Clone, Copy)]
struct Probe {
    /// Lower bound on min f over the samples.
    lower: f64,
    /// Sample with the smallest |f| among those with |f| ≤ threshold.
    best: Option<(f64, Point3<f64>)>,
    /// Smallest f actually evaluated (∞ if everything was pruned).
    exact_min: f64,
    /// Lower bound on the joint travel before any sample can reach the threshold.
    slack: f64,
}

/// Bound on sample travel per unit joint angle: `base + slope·s` at axial offset `s`.
#[derive(Debug, Clone, Copy)]
struct Lever {
    base: f64,
    slope: f64,
}

impl Lever {
    const UNIT: Lever = Lever { base: 1.0, slope: 0.0 };

    fn at(self, s: f64) -> f64 {
        self.base + self.slope * s
    }
}

impl Probe {
    fn empty() -> Self {
        Self { lower: f64::INFINITY, best: None, exact_min: f64::INFINITY, slack: f64::INFINITY }
    }

    fn bound(&mut self, f_lower: f64, lever: f64, threshold: f64) {
        self.lower = self.lower.min(f_lower);
        self.slack = self.slack.min((f_lower - threshold) / (LIPSCHITZ * lever));
    }

    fn visit(&mut self, f: f64, p: Point3<f64>, threshold: f64, lever: f64) {
        self.bound(f, lever, threshold);
        self.exact_min = self.exact_min.min(f);
        if f.abs() <= threshold && self.best.is_none_or(|(b, _)| f.abs() < b) {
            self.best = Some((f.abs(), p));
        }
    }

    fn touching(&self, threshold: f64) -> bool {
        self.exact_min <= threshold
    }
}

impl HandModel {
    pub fn barrett() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), HandError> {
        let positive = [
            ("palm_radius", self.palm_radius),
            ("proximal_length", self.proximal_length),
            ("distal_length", self.distal_length),
            ("capsule_radius", self.capsule_radius),
            ("step", self.step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HandError::InvalidModel(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mount_radius >= 0.0) || !(self.breakaway_ratio >= 0.0) {
            return Err(HandError::InvalidModel("mount_radius and breakaway_ratio must be ≥ 0".into()));
        }
        for (name, l) in [("spread", self.spread), ("proximal", self.proximal), ("distal", self.distal)] {
            if !(l.min < l.max) {
                return Err(HandError::InvalidModel(format!("{name} limits need min < max")));
            }
        }
        if self.speeds.iter().any(|s| !(*s >= 0.0)) {
            return Err(HandError::InvalidModel("speeds must be ≥ 0".into()));
        }
        let s = &self.sampling;
        if s.proximal_axial < 2 || s.distal_axial < 2 || s.ring < 3 {
            return Err(HandError::InvalidModel("sampling too sparse".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, HandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HandError::Io { path: path.display().to_string(), source })?;
        let model = Self::from_json_str(&text)
            .map_err(|source| HandError::Json { path: path.display().to_string(), source })?;
        model.validate()?;
        Ok(model)
    }

    pub fn finger_azimuth(&self, finger: usize, spread: f64) -> f64 {
        match finger {
            0 => self.finger_one_azimuth,
            1 => self.spread_base + 0.5 * spread,
            _ => -(self.spread_base + 0.5 * spread),
        }
    }

    fn distal_angle(&self, theta: f64, breakaway: f64) -> f64 {
        (self.breakaway_ratio * theta + breakaway).min(self.distal.max)
    }

    pub fn check_state(&self, state: &HandState) -> Result<(), HandError> {
        self.spread.check("spread", state.q[0])?;
        for i in 0..3 {
            self.proximal.check("proximal", state.q[i + 1])?;
            self.distal.check("distal", self.breakaway_ratio * state.q[i + 1] + state.breakaway[i])?;
        }
        Ok(())
    }

    /// Link poses of one finger in the palm frame.
    fn finger_links(&self, azimuth: f64, theta: f64, distal: f64) -> [LinkPose; 2] {
        let radial = Vector3::new(azimuth.cos(), azimuth.sin(), 0.0);
        let frame_at = |elev: f64, start: Point3<f64>| {
            let (s, c) = elev.sin_cos();
            let z = radial * s + Vector3::z() * c;
            let x = radial * c - Vector3::z() * s;
            let y = z.cross(&x);
            let rot = Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[x, y, z]));
            Isometry3::from_parts(Translation3::from(start.coords), UnitQuaternion::from_rotation_matrix(&rot))
        };
        let tau = self.mount_tilt;
        let mount = Point3::from(
            (radial * tau.sin() + Vector3::z() * tau.cos()) * self.mount_radius,
        );
        let f1 = frame_at(tau - theta, mount);
        let knuckle = f1 * Point3::new(0.0, 0.0, self.proximal_length);
        let f2 = frame_at(tau - theta - distal, knuckle);
        let tip = f2 * Point3::new(0.0, 0.0, self.distal_length);
        [
            LinkPose { start: mount, end: knuckle, frame: f1 },
            LinkPose { start: knuckle, end: tip, frame: f2 },
        ]
    }

    fn finger_world(&self, palm: &Isometry3<f64>, azimuth: f64, theta: f64, distal: f64) -> [LinkPose; 2] {
        self.finger_links(azimuth, theta, distal).map(|l| LinkPose {
            start: palm * l.start,
            end: palm * l.end,
            frame: palm * l.frame,
        })
    }

    pub fn forward_kinematics(&self, palm: &Isometry3<f64>, state: &HandState) -> Result<Kinematics, HandError> {
        self.check_state(state)?;
        let links: [[LinkPose; 2]; 3] = std::array::from_fn(|i| {
            let az = self.finger_azimuth(i, state.q[0]);
            let th = state.q[i + 1];
            self.finger_world(palm, az, th, self.distal_angle(th, state.breakaway[i]))
        });
        Ok(Kinematics { palm: *palm, fingertips: links.map(|l| l[1].end), links })
    }

    fn probe_capsule(
        &self,
        link: &LinkPose,
        axial: usize,
        cap: bool,
        lever: Lever,
        gpis: &GpisModel,
        thr: f64,
    ) -> Probe {
        let r = self.capsule_radius;
        let rot = link.frame.rotation;
        let (ex, ey, ez) = (rot * Vector3::x(), rot * Vector3::y(), rot * Vector3::z());
        let len = (link.end - link.start).norm();
        let ring = self.sampling.ring;
        let mut probe = Probe::empty();
        for j in 0..axial {
            let s = len * j as f64 / (axial - 1) as f64;
            let a = link.start + ez * s;
            let fa = gpis.value(&a);
            let is_tip = cap && j + 1 == axial;
            let l = lever.at(s);
            if fa - LIPSCHITZ * r > thr {
                probe.bound(fa - LIPSCHITZ * r, l, thr);
                continue;
            }
            for k in 0..ring {
                let (s, c) = (TAU * k as f64 / ring as f64).sin_cos();
                let p = a + (ex * c + ey * s) * r;
                probe.visit(gpis.value(&p), p, thr, l);
            }
            if is_tip {
                let p = a + ez * r;
                probe.visit(gpis.value(&p), p, thr, l);
                let half = ring / 2;
                for k in 0..half {
                    let (s, c) = (TAU * k as f64 / half as f64).sin_cos();
                    let p = a + (ez + (ex * c + ey * s)) * (r / 2f64.sqrt());
                    probe.visit(gpis.value(&p), p, thr, l);
                }
            }
        }
        probe
    }

    fn probe_palm(&self, palm: &Isometry3<f64>, gpis: &GpisModel, thr: f64) -> Probe {
        let mut probe = Probe::empty();
        let c = palm * Point3::origin();
        let fc = gpis.value(&c);
        if fc - LIPSCHITZ * self.palm_radius > thr {
            probe.bound(fc - LIPSCHITZ * self.palm_radius, 1.0, thr);
            return probe;
        }
        probe.visit(fc, c, thr, 1.0);
        let rings = self.sampling.palm_rings.max(1);
        for ring in 1..=rings {
            let rad = self.palm_radius * ring as f64 / rings as f64;
            let n = self.sampling.palm_ring_points * ring;
            for k in 0..n {
                let (s, co) = (TAU * k as f64 / n as f64).sin_cos();
                let p = palm * Point3::new(rad * co, rad * s, 0.0);
                probe.visit(gpis.value(&p), p, thr, 1.0);
            }
        }
        probe
    }

    fn probe_finger(&self, links: &[LinkPose; 2], gpis: &GpisModel, thr: f64) -> [Probe; 2] {
        self.probe_finger_with(links, [Lever::UNIT; 2], gpis, thr)
    }

    fn probe_finger_with(&self, links: &[LinkPose; 2], levers: [Lever; 2], gpis: &GpisModel, thr: f64) -> [Probe; 2] {
        [self.probe_proximal(&links[0], levers[0], gpis, thr), self.probe_distal(&links[1], levers[1], gpis, thr)]
    }

    fn probe_proximal(&self, link: &LinkPose, lever: Lever, gpis: &GpisModel, thr: f64) -> Probe {
        self.probe_capsule(link, self.sampling.proximal_axial, false, lever, gpis, thr)
    }

    fn probe_distal(&self, link: &LinkPose, lever: Lever, gpis: &GpisModel, thr: f64) -> Probe {
        self.probe_capsule(link, self.sampling.distal_axial, true, lever, gpis, thr)
    }

    /// Collision iff some sample has f < −`penetration_tol`.
    pub fn check_collision(
        &self,
        palm: &Isometry3<f64>,
        state: &HandState,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> Result<CollisionReport, HandError> {
        let kin = self.forward_kinematics(palm, state)?;
        let thr = params.threshold;
        let mut lower = self.probe_palm(palm, gpis, thr).lower;
        for links in &kin.links {
            for p in self.probe_finger(links, gpis, thr) {
                lower = lower.min(p.lower);
            }
        }
        Ok(CollisionReport {
            colliding: lower < -params.penetration_tol,
            min_value: lower,
            worst_penetration: (-lower).max(0.0),
        })
    }

    /// Palm-only collision test, used before any finger motion.
    pub fn palm_collides(&self, palm: &Isometry3<f64>, gpis: &GpisModel, params: &ContactParams) -> bool {
        self.probe_palm(palm, gpis, params.threshold).lower < -params.penetration_tol
    }

    /// AutoGrasp from the open hand with spread 0.
    pub fn auto_grasp(
        &self,
        palm: &Isometry3<f64>,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> Result<GraspOutcome, HandError> {
        self.auto_grasp_from(palm, &HandState::open(self.spread.min), gpis, params)
    }

    /// AutoGrasp starting at `start`. Fingers that start in collision are
    /// opened back (breakaway first, then proximal) until free.
    pub fn auto_grasp_from(
        &self,
        palm: &Isometry3<f64>,
        start: &HandState,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> Result<GraspOutcome, HandError> {
        self.check_state(start)?;
        let thr = params.threshold;
        let pen = params.penetration_tol;
        let palm_probe = self.probe_palm(palm, gpis, thr);
        if palm_probe.lower < -pen {
            return Err(HandError::InitialCollision { min_value: palm_probe.exact_min });
        }
        let mut state = *start;

        for i in 0..3 {
            self.open_until_free(palm, &mut state, i, gpis, params)?;
        }

        if self.speeds[0] > 0.0 {
            self.sweep_spread(palm, &mut state, gpis, params);
        }

        for i in 0..3 {
            self.close_finger(palm, &mut state, i, gpis, params);
        }
        let contacts = self.contacts_at(palm, &state, gpis, params)?;
        Ok(GraspOutcome { state, contacts })
    }

    /// Contacts of a fixed configuration: per link (and the palm) the sample
    /// with the smallest |f| within the threshold.
    pub fn contacts_at(
        &self,
        palm: &Isometry3<f64>,
        state: &HandState,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> Result<Vec<Contact>, HandError> {
        let thr = params.threshold;
        let kin = self.forward_kinematics(palm, state)?;
        let mut contacts = Vec::new();
        if let Some((_, p)) = self.probe_palm(palm, gpis, thr).best {
            contacts.extend(self.make_contact(gpis, p, LinkKind::Palm, None, None));
        }
        for (i, links) in kin.links.iter().enumerate() {
            let probes = self.probe_finger(links, gpis, thr);
            for (l, kind) in [LinkKind::Proximal, LinkKind::Distal].into_iter().enumerate() {
                if let Some((_, p)) = probes[l].best {
                    let axis = links[l].end - links[l].start;
                    contacts.extend(self.make_contact(gpis, p, kind, Some(i), Some(axis)));
                }
            }
        }
        Ok(contacts)
    }

    fn make_contact(
        &self,
        gpis: &GpisModel,
        p: Point3<f64>,
        link: LinkKind,
        finger: Option<usize>,
        axis: Option<Vector3<f64>>,
    ) -> Option<Contact> {
        let (value, g) = gpis.query(&p);
        let gn = g.norm();
        if !(gn > 1e-12) {
            return None;
        }
        let normal = g / gn;
        let tangent = axis.and_then(|a| {
            let t = a - normal * a.dot(&normal);
            (t.norm() > 1e-9).then(|| t.normalize())
        });
        Some(Contact { point: p, normal, link, finger, value, tangent })
    }

    fn open_until_free(
        &self,
        palm: &Isometry3<f64>,
        state: &mut HandState,
        i: usize,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> Result<(), HandError> {
        let az = self.finger_azimuth(i, state.q[0]);
        loop {
            let th = state.q[i + 1];
            let links = self.finger_world(palm, az, th, self.distal_angle(th, state.breakaway[i]));
            let [a, b] = self.probe_finger(&links, gpis, params.threshold);
            let low = a.lower.min(b.lower);
            if low >= -params.penetration_tol {
                return Ok(());
            }
            if state.breakaway[i] > 0.0 {
                state.breakaway[i] = (state.breakaway[i] - self.step).max(0.0);
            } else if th > self.proximal.min {
                state.q[i + 1] = (th - self.step).max(self.proximal.min);
            } else {
                return Err(HandError::InitialCollision { min_value: low });
            }
        }
    }

    fn sweep_spread(&self, palm: &Isometry3<f64>, state: &mut HandState, gpis: &GpisModel, params: &ContactParams) {
        let ds = self.step * self.speeds[0];
        let thr = params.threshold;
        let touching = |spread: f64, st: &HandState| -> (bool, bool) {
            let mut touch = false;
            let mut collide = false;
            for i in 1..3 {
                let th = st.q[i + 1];
                let links = self.finger_world(palm, self.finger_azimuth(i, spread), th, self.distal_angle(th, st.breakaway[i]));
                for p in self.probe_finger(&links, gpis, thr) {
                    touch |= p.touching(thr);
                    collide |= p.lower < -params.penetration_tol;
                }
            }
            (touch, collide)
        };
        if touching(state.q[0], state).0 {
            return;
        }
        while state.q[0] < self.spread.max {
            let next = (state.q[0] + ds).min(self.spread.max);
            let (touch, collide) = touching(next, state);
            if collide {
                break;
            }
            state.q[0] = next;
            if touch {
                break;
            }
        }
    }

    /// Closes finger `i`; returns the final [proximal, distal] probes.
    fn close_finger(
        &self,
        palm: &Isometry3<f64>,
        state: &mut HandState,
        i: usize,
        gpis: &GpisModel,
        params: &ContactParams,
    ) -> [Probe; 2] {
        let thr = params.threshold;
        let pen = params.penetration_tol;
        let az = self.finger_azimuth(i, state.q[0]);
        let r = self.capsule_radius;
        let kappa = self.breakaway_ratio;
        let closing = [
            Lever { base: r, slope: 1.0 },
            Lever { base: self.proximal_length + r * (1.0 + kappa), slope: 1.0 + kappa },
        ];
        let links_at = |th: f64, b: f64| self.finger_world(palm, az, th, self.distal_angle(th, b));
        let mut theta = state.q[i + 1];
        let mut brk = state.breakaway[i];
        let mut probes = self.probe_finger_with(&links_at(theta, brk), closing, gpis, thr);
        let speed = self.speeds[i + 1];
        if speed <= 0.0 {
            return probes;
        }

        let dth = self.step * speed;
        while !probes[0].touching(thr) && !probes[1].touching(thr) && theta < self.proximal.max {
            let k = advance_steps(probes[0].slack.min(probes[1].slack), dth);
            let next = (theta + k * dth).min(self.proximal.max);
            let np = self.probe_finger_with(&links_at(next, brk), closing, gpis, thr);
            if np[0].exact_min.min(np[1].exact_min) < -pen {
                break;
            }
            theta = next;
            probes = np;
        }

        if !probes[1].touching(thr) {
            let lever = Lever { base: r, slope: 1.0 };
            let room = |th: f64, b: f64| self.distal.max - (kappa * th + b);
            let mut distal = self.probe_distal(&links_at(theta, brk)[1], lever, gpis, thr);
            while !distal.touching(thr) && room(theta, brk) > 1e-12 {
                let k = advance_steps(distal.slack, self.step);
                let next = brk + (k * self.step).min(room(theta, brk));
                let np = self.probe_distal(&links_at(theta, next)[1], lever, gpis, thr);
                if np.exact_min < -pen {
                    break;
                }
                brk = next;
                distal = np;
            }
            probes[1] = distal;
        }
        state.q[i + 1] = theta;
        state.breakaway[i] = brk;
        probes
    }

    /// `cᵢ = |f(tipᵢ)| − ε_c` at the outer capsule point of each fingertip.
    pub fn fingertip_constraint_residual(
        &self,
        palm: &Isometry3<f64>,
        state: &HandState,
        gpis: &GpisModel,
        threshold: f64,
    ) -> Result<[f64; 3], HandError> {
        let kin = self.forward_kinematics(palm, state)?;
        Ok(kin.tip_surface_points(self.capsule_radius).map(|p| gpis.value(&p).abs() - threshold))
    }
}

/// Whole steps that can be skipped safely plus the one that may touch.
fn advance_steps(gap: f64, per_step: f64) -> f64 {
    if gap.is_finite() && gap > 0.0 {
        ((gap / per_step).floor() + 1.0).min(1e6)
    } else if gap.is_infinite() && gap > 0.0 {
        1e6
    } else {
        1.0
    }
}
