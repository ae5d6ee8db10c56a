use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SimError;

/// One of the six faces of an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-z")]
    NegZ,
    #[serde(rename = "+z")]
    PosZ,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::NegX,
        Face::PosX,
        Face::NegY,
        Face::PosY,
        Face::NegZ,
        Face::PosZ,
    ];

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    pub fn is_max(self) -> bool {
        self as usize % 2 == 1
    }

    fn from_axis(axis: usize, is_max: bool) -> Face {
        Face::ALL[axis * 2 + is_max as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
}

/// An extra edge feature painted on a face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFeature {
    pub face: Face,
    #[serde(rename = "from_m")]
    pub a: Vector3<f64>,
    #[serde(rename = "to_m")]
    pub b: Vector3<f64>,
}

impl EdgeFeature {
    pub fn segment(&self) -> Segment {
        Segment {
            a: self.a,
            b: self.b,
        }
    }
}

/// Axis-aligned box surface. Cameras may sit inside (room shells) or outside (obstacles).
///
/// Face borders always act as edge features. A textured face yields depth everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidBox {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "min_m")]
    pub min: Vector3<f64>,
    #[serde(rename = "max_m")]
    pub max: Vector3<f64>,
    #[serde(default)]
    pub textured_faces: Vec<Face>,
    #[serde(default)]
    pub edges: Vec<EdgeFeature>,
    /// Full-height vertical stripes on the four wall faces at every multiple of this
    /// spacing (world coordinates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stripe_spacing_m: Option<f64>,
}

impl SolidBox {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self {
            name: String::new(),
            min,
            max,
            textured_faces: Vec::new(),
            edges: Vec::new(),
            stripe_spacing_m: None,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn textured(mut self, face: Face) -> Self {
        if !self.textured_faces.contains(&face) {
            self.textured_faces.push(face);
        }
        self
    }

    pub fn with_edge(mut self, face: Face, a: Vector3<f64>, b: Vector3<f64>) -> Self {
        self.edges.push(EdgeFeature { face, a, b });
        self
    }

    /// Adds full-height vertical stripes (parallel to z) on an x or y face at the given
    /// horizontal coordinates.
    pub fn with_vertical_stripes(mut self, face: Face, at: &[f64]) -> Self {
        let axis = face.axis();
        assert!(axis < 2, "vertical stripes need a wall face");
        let fixed = self.face_coordinate(face);
        let other = 1 - axis;
        for &c in at {
            let mut a = Vector3::zeros();
            a[axis] = fixed;
            a[other] = c;
            a.z = self.min.z;
            let mut b = a;
            b.z = self.max.z;
            self = self.with_edge(face, a, b);
        }
        self
    }

    pub fn with_stripe_spacing(mut self, spacing: f64) -> Self {
        self.stripe_spacing_m = Some(spacing);
        self
    }

    fn spaced_stripes(&self, face: Face) -> Vec<Segment> {
        let (Some(sp), axis) = (self.stripe_spacing_m, face.axis()) else {
            return Vec::new();
        };
        if axis == 2 {
            return Vec::new();
        }
        let other = 1 - axis;
        let fixed = self.face_coordinate(face);
        let first = (self.min[other] / sp).floor() as i64 + 1;
        (first..)
            .map(|k| k as f64 * sp)
            .take_while(|c| *c < self.max[other])
            .filter(|c| *c > self.min[other])
            .map(|c| {
                let mut a = Vector3::zeros();
                a[axis] = fixed;
                a[other] = c;
                a.z = self.min.z;
                let mut b = a;
                b.z = self.max.z;
                Segment { a, b }
            })
            .collect()
    }

    pub fn face_coordinate(&self, face: Face) -> f64 {
        if face.is_max() {
            self.max[face.axis()]
        } else {
            self.min[face.axis()]
        }
    }

    pub fn is_textured(&self, face: Face) -> bool {
        self.textured_faces.contains(&face)
    }

    /// The four border segments of a face.
    pub fn face_borders(&self, face: Face) -> [Segment; 4] {
        let axis = face.axis();
        let c = self.face_coordinate(face);
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let corner = |su: bool, sv: bool| {
            let mut p = Vector3::zeros();
            p[axis] = c;
            p[u] = if su { self.max[u] } else { self.min[u] };
            p[v] = if sv { self.max[v] } else { self.min[v] };
            p
        };
        let (c00, c10, c11, c01) = (
            corner(false, false),
            corner(true, false),
            corner(true, true),
            corner(false, true),
        );
        [
            Segment { a: c00, b: c10 },
            Segment { a: c10, b: c11 },
            Segment { a: c11, b: c01 },
            Segment { a: c01, b: c00 },
        ]
    }

    /// Border and extra edge features of a face.
    pub fn face_edges(&self, face: Face) -> Vec<Segment> {
        let mut out = self.face_borders(face).to_vec();
        out.extend(
            self.edges
                .iter()
                .filter(|e| e.face == face)
                .map(EdgeFeature::segment),
        );
        out.extend(self.spaced_stripes(face));
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if (0..3).any(|a| !(self.max[a] > self.min[a])) {
            return Err(SimError::InvalidWorld(format!(
                "box '{}' has non-positive extent",
                self.name
            )));
        }
        if self
            .stripe_spacing_m
            .is_some_and(|s| !(s > 0.0 && s.is_finite()))
        {
            return Err(SimError::InvalidWorld(format!(
                "box '{}' has non-positive stripe spacing",
                self.name
            )));
        }
        for e in &self.edges {
            let axis = e.face.axis();
            let c = self.face_coordinate(e.face);
            for p in [e.a, e.b] {
                let on_plane = (p[axis] - c).abs() <= 1e-6;
                let inside =
                    (0..3).all(|a| p[a] >= self.min[a] - 1e-6 && p[a] <= self.max[a] + 1e-6);
                if !(on_plane && inside) {
                    return Err(SimError::InvalidWorld(format!(
                        "edge ({:?} -> {:?}) does not lie on face {:?} of box '{}'",
                        e.a, e.b, e.face, self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nearest intersection with `t > t_min` of `o + t d`, with the face hit.
    pub fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>, t_min: f64) -> Option<(f64, Face)> {
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        let mut enter_face = Face::NegX;
        let mut exit_face = Face::PosX;
        for a in 0..3 {
            if d[a] == 0.0 {
                if o[a] < self.min[a] || o[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let t0 = (self.min[a] - o[a]) / d[a];
            let t1 = (self.max[a] - o[a]) / d[a];
            let (near, far, near_max) = if t0 < t1 {
                (t0, t1, false)
            } else {
                (t1, t0, true)
            };
            if near > t_enter {
                t_enter = near;
                enter_face = Face::from_axis(a, near_max);
            }
            if far < t_exit {
                t_exit = far;
                exit_face = Face::from_axis(a, !near_max);
            }
        }
        if t_enter > t_exit {
            return None;
        }
        if t_enter > t_min {
            Some((t_enter, enter_face))
        } else if t_exit > t_min {
            Some((t_exit, exit_face))
        } else {
            None
        }
    }
}

/// Static scene made of box surfaces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldModel {
    pub boxes: Vec<SolidBox>,
}

/// Ray-surface hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub box_index: usize,
    pub face: Face,
}

impl WorldModel {
    pub fn new(boxes: Vec<SolidBox>) -> Self {
        Self { boxes }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.boxes.iter().try_for_each(SolidBox::validate)
    }

    /// Nearest surface hit along `o + t d`, `t > t_min`.
    pub fn raycast(&self, o: &Vector3<f64>, d: &Vector3<f64>, t_min: f64) -> Option<Hit> {
        self.boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                b.intersect(o, d, t_min).map(|(t, face)| Hit {
                    t,
                    box_index: i,
                    face,
                })
            })
            .min_by(|x, y| x.t.total_cmp(&y.t))
    }

    /// Bounding box of all surfaces.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = self.boxes.first()?;
        Some(
            self.boxes
                .iter()
                .fold((first.min, first.max), |(lo, hi), b| {
                    (lo.inf(&b.min), hi.sup(&b.max))
                }),
        )
    }

    /// Whether `p` is within `clearance` (per axis) of any box surface.
    pub fn near_surface(&self, p: &Vector3<f64>, clearance: f64) -> bool {
        self.boxes.iter().any(|b| {
            let inside_expanded =
                (0..3).all(|a| p[a] >= b.min[a] - clearance && p[a] <= b.max[a] + clearance);
            if !inside_expanded {
                return false;
            }
            let inside_shrunk =
                (0..3).all(|a| p[a] > b.min[a] + clearance && p[a] < b.max[a] - clearance);
            !inside_shrunk
        })
    }
}
