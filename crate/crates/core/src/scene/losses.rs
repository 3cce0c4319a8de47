use alloc::string::ToString;
use alloc::vec::Vec;

use super::silhouette::{evaluate_silhouette, linearize_silhouette, SilhouetteLinearization};
use super::{missing_prior, ContactTarget, LossBreakdown, SceneConfig, SceneState, ScalePriors, OBJECT_PARAMS};
use crate::error::{Error, Result};
use crate::geometry::{part_mean_normal, KdTree, PartLabeledMesh, TriangleBvh, TriangleMesh};
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTerm {
    Contact,
    Normal,
    Penetration,
    Scale,
    Reprojection,
}

#[derive(Debug, Clone)]
struct PairLinearization {
    human: usize,
    object: usize,
    active: bool,
    /// Body normal and object normal in the exemplar frame; `None` when
    /// either part normal is degenerate.
    normals: Option<(Vec3, Vec3)>,
    object_vertices: Vec<usize>,
    /// Target on the body part for each object part vertex, as body vertex
    /// indices with barycentric weights.
    nearest: Vec<([usize; 3], [f64; 3])>,
}

#[derive(Debug, Clone, Copy)]
struct Inside {
    object: usize,
    vertex: usize,
    human: usize,
    cell: [usize; 3],
}

/// Nearest-neighbor correspondences, normal indicators, penetration active
/// set with its SDF cells, and silhouette correspondences, all held fixed
/// while evaluating.
#[derive(Debug, Clone)]
pub struct Linearization {
    pairs: Vec<PairLinearization>,
    inside: Vec<Inside>,
    silhouettes: Vec<SilhouetteLinearization>,
}

impl Linearization {
    /// Number of pairs whose normal indicator is active.
    pub fn active_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.active).count()
    }

    pub fn penetrating_vertices(&self) -> usize {
        self.inside.len()
    }
}

pub fn linearize(state: &SceneState, config: &SceneConfig) -> Result<Linearization> {
    let mut pairs = Vec::new();
    for it in &state.interactions {
        let human = &state.humans[it.human];
        let object = &state.objects[it.object];
        let rot = object.transform.rotation_matrix();
        let body_points = human.vertices();
        let object_points = object.vertices();
        for (op, bp) in &it.map.pairs {
            let missing = || Error::MissingPart { object_part: op.clone(), body_part: bp.to_string() };
            let oid = object.mesh.part_id(op).ok_or_else(missing)?;
            let bid = human.mesh.part_id(bp).ok_or_else(missing)?;
            let object_vertices = object.mesh.vertex_indices_of(oid);
            let body_vertices = human.mesh.vertex_indices_of(bid);
            if object_vertices.is_empty() || body_vertices.is_empty() {
                return Err(missing());
            }
            let normals = match (part_mean_normal(&human.mesh, bid), part_mean_normal(&object.mesh, oid)) {
                (Ok(nh), Ok(no)) => Some((nh, no)),
                _ => None,
            };
            let active = normals.is_none_or(|(nh, no)| nh.dot(&(rot * no)) < config.contact_normal_cos_max);
            let nearest = match config.contact_target {
                ContactTarget::Vertex => {
                    let sub: Vec<Vec3> = body_vertices.iter().map(|&i| body_points[i]).collect();
                    let tree = KdTree::from_points3(&sub);
                    object_vertices
                        .iter()
                        .map(|&k| {
                            let j = body_vertices[tree.nearest3(&object_points[k]).expect("non-empty part").index];
                            ([j; 3], [1.0, 0.0, 0.0])
                        })
                        .collect()
                }
                ContactTarget::Surface => surface_targets(&human.mesh, bid, &body_points, &object_vertices, &object_points)?,
            };
            pairs.push(PairLinearization { human: it.human, object: it.object, active, normals, object_vertices, nearest });
        }
    }
    let mut inside = Vec::new();
    for (oi, object) in state.objects.iter().enumerate() {
        let points = object.vertices();
        for (hi, human) in state.humans.iter().enumerate() {
            for (k, x) in points.iter().enumerate() {
                let y = human.root + (x - human.root) / human.scale;
                let s = human.sdf().sample_with_gradient(&y);
                if let (true, Some(cell)) = (s.value < 0.0, s.cell) {
                    inside.push(Inside { object: oi, vertex: k, human: hi, cell });
                }
            }
        }
    }
    let silhouettes = state
        .objects
        .iter()
        .map(|o| linearize_silhouette(&o.vertices(), o.mesh.mesh.faces(), &state.camera, o.target()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Linearization { pairs, inside, silhouettes })
}

/// Closest points on the triangles whose corners all lie in body part
/// `part`. Falls back to the part's vertices when it has no such triangle.
fn surface_targets(
    body: &PartLabeledMesh,
    part: u32,
    points: &[Vec3],
    object_vertices: &[usize],
    object_points: &[Vec3],
) -> Result<Vec<([usize; 3], [f64; 3])>> {
    let faces: Vec<[usize; 3]> = body
        .mesh
        .faces()
        .iter()
        .map(|f| f.map(|i| i as usize))
        .filter(|f| f.iter().all(|&i| body.part_of_vertex()[i] == part))
        .collect();
    if faces.is_empty() {
        let verts = body.vertex_indices_of(part);
        let sub: Vec<Vec3> = verts.iter().map(|&i| points[i]).collect();
        let tree = KdTree::from_points3(&sub);
        return Ok(object_vertices
            .iter()
            .map(|&k| ([verts[tree.nearest3(&object_points[k]).expect("non-empty part").index]; 3], [1.0, 0.0, 0.0]))
            .collect());
    }
    let sub = TriangleMesh::new(
        points.to_vec(),
        faces.iter().map(|f| f.map(|i| i as u32)).collect(),
    )?;
    let bvh = TriangleBvh::new(&sub);
    Ok(object_vertices
        .iter()
        .map(|&k| {
            let (q, t, _) = bvh.closest_point(&object_points[k]).expect("non-empty part");
            let f = faces[t];
            (f, barycentric(&q, &points[f[0]], &points[f[1]], &points[f[2]]))
        })
        .collect())
}

fn barycentric(q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let (v0, v1, v2) = (b - a, c - a, q - a);
    let (d00, d01, d11) = (v0.dot(&v0), v0.dot(&v1), v1.dot(&v1));
    let (d20, d21) = (v2.dot(&v0), v2.dot(&v1));
    let den = d00 * d11 - d01 * d01;
    if !(den.abs() > 0.0) {
        return [1.0, 0.0, 0.0];
    }
    let v = (d11 * d20 - d01 * d21) / den;
    let w = (d00 * d21 - d01 * d20) / den;
    [1.0 - v - w, v, w]
}

/// Gradient accumulator in the optimizer's parameter layout.
struct Grad<'a> {
    state: &'a SceneState,
    g: Vec<f64>,
}

impl<'a> Grad<'a> {
    fn new(state: &'a SceneState) -> Self {
        Grad { state, g: alloc::vec![0.0; state.param_len()] }
    }

    /// Adds `gx` for the posed object point `x`.
    fn object_point(&mut self, object: usize, x: &Vec3, gx: &Vec3) {
        let t = &self.state.objects[object].transform;
        let rel = x - t.translation;
        let base = OBJECT_PARAMS * object;
        let dr = rel.cross(gx);
        let g = &mut self.g[base..base + OBJECT_PARAMS];
        g[0] += dr.x;
        g[1] += dr.y;
        g[2] += dr.z;
        g[3] += gx.dot(&rel) / t.scale;
        g[4] += gx.x;
        g[5] += gx.y;
        g[6] += gx.z;
    }

    fn object_rotation(&mut self, object: usize, gr: &Vec3) {
        let base = OBJECT_PARAMS * object;
        for a in 0..3 {
            self.g[base + a] += gr[a];
        }
    }

    fn object_scale(&mut self, object: usize, gs: f64) {
        self.g[OBJECT_PARAMS * object + 3] += gs;
    }

    fn human_scale(&mut self, human: usize, gs: f64) {
        self.g[OBJECT_PARAMS * self.state.objects.len() + human] += gs;
    }
}

fn contact(state: &SceneState, lin: &Linearization, grad: &mut Grad) -> f64 {
    let mut value = 0.0;
    for p in lin.pairs.iter().filter(|p| p.active) {
        let human = &state.humans[p.human];
        let t = &state.objects[p.object].transform;
        let verts = state.objects[p.object].mesh.mesh.vertices();
        let body = human.mesh.mesh.vertices();
        let w = 1.0 / p.object_vertices.len() as f64;
        for (&k, (idx, bw)) in p.object_vertices.iter().zip(&p.nearest) {
            let o = t.apply(&verts[k]);
            let target: Vec3 = (0..3).map(|a| body[idx[a]] * bw[a]).sum();
            let d = o - human.scale_point(&target);
            let dist = d.norm();
            value += dist * w;
            // Below this the direction is rounding noise.
            if dist > 1e-9 {
                let u = d * (w / dist);
                grad.object_point(p.object, &o, &u);
                grad.human_scale(p.human, -u.dot(&(target - human.root)));
            }
        }
    }
    value
}

fn normal(state: &SceneState, lin: &Linearization, grad: &mut Grad) -> f64 {
    let mut value = 0.0;
    for p in lin.pairs.iter().filter(|p| p.active) {
        if let Some((nh, no)) = p.normals {
            let m = state.objects[p.object].transform.rotation_matrix() * no;
            value += 1.0 + nh.dot(&m);
            grad.object_rotation(p.object, &m.cross(&nh));
        }
    }
    value
}

fn penetration(state: &SceneState, lin: &Linearization, grad: &mut Grad) -> f64 {
    let mut value = 0.0;
    for c in &lin.inside {
        let human = &state.humans[c.human];
        let object = &state.objects[c.object];
        let x = object.transform.apply(&object.mesh.mesh.vertices()[c.vertex]);
        let s = human.scale;
        let rel = x - human.root;
        let (f, gf) = human.sdf().sample_in_cell(c.cell, &(human.root + rel / s));
        value -= s * f;
        grad.object_point(c.object, &x, &(-gf));
        grad.human_scale(c.human, -(f - gf.dot(&rel) / s));
    }
    value
}

fn scale(state: &SceneState, priors: &ScalePriors, grad: &mut Grad) -> Result<f64> {
    let mut value = 0.0;
    for (i, o) in state.objects.iter().enumerate() {
        let target = *priors.objects.get(i).ok_or_else(|| missing_prior("object", i))?;
        let d = o.transform.scale - target;
        value += d * d;
        grad.object_scale(i, 2.0 * d);
    }
    for (i, h) in state.humans.iter().enumerate() {
        let target = *priors.humans.get(i).ok_or_else(|| missing_prior("human", i))?;
        let d = h.scale - target;
        value += d * d;
        grad.human_scale(i, 2.0 * d);
    }
    Ok(value)
}

fn reprojection(state: &SceneState, lin: &Linearization, grad: &mut Grad) -> f64 {
    let mut value = 0.0;
    for (i, (o, sl)) in state.objects.iter().zip(&lin.silhouettes).enumerate() {
        let points = o.vertices();
        let mut gx = alloc::vec![Vec3::zeros(); points.len()];
        value += evaluate_silhouette(&points, &state.camera, o.target(), sl, Some(&mut gx));
        for (x, g) in points.iter().zip(&gx) {
            if *g != Vec3::zeros() {
                grad.object_point(i, x, g);
            }
        }
    }
    value
}

/// One unweighted loss term and its gradient at `state`, with the
/// correspondences of `lin`.
pub fn evaluate_term(
    state: &SceneState,
    priors: &ScalePriors,
    lin: &Linearization,
    term: LossTerm,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = Grad::new(state);
    let v = match term {
        LossTerm::Contact => contact(state, lin, &mut grad),
        LossTerm::Normal => normal(state, lin, &mut grad),
        LossTerm::Penetration => penetration(state, lin, &mut grad),
        LossTerm::Scale => scale(state, priors, &mut grad)?,
        LossTerm::Reprojection => reprojection(state, lin, &mut grad),
    };
    Ok((v, grad.g))
}

/// Every term plus the gradient of the weighted total.
pub fn evaluate_frozen(
    state: &SceneState,
    priors: &ScalePriors,
    lin: &Linearization,
    config: &SceneConfig,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let w = &config.weights;
    let terms = [
        (LossTerm::Contact, w.contact),
        (LossTerm::Normal, w.normal),
        (LossTerm::Penetration, w.penetration),
        (LossTerm::Scale, w.scale),
        (LossTerm::Reprojection, w.reprojection),
    ];
    let mut values = [0.0; 5];
    let mut total = alloc::vec![0.0; state.param_len()];
    for (i, (term, weight)) in terms.iter().enumerate() {
        let (v, g) = evaluate_term(state, priors, lin, *term)?;
        values[i] = v;
        for (t, g) in total.iter_mut().zip(g) {
            *t += weight * g;
        }
    }
    let [c, n, p, s, r] = values;
    Ok((LossBreakdown::new(c, n, p, s, r, w), total))
}

pub fn total_loss(state: &SceneState, priors: &ScalePriors, config: &SceneConfig) -> Result<LossBreakdown> {
    let lin = linearize(state, config)?;
    Ok(evaluate_frozen(state, priors, &lin, config)?.0)
}

fn single(state: &SceneState, config: &SceneConfig, term: LossTerm, priors: &ScalePriors) -> Result<(f64, Vec<f64>)> {
    evaluate_term(state, priors, &linearize(state, config)?, term)
}

pub fn loss_contact(state: &SceneState, config: &SceneConfig) -> Result<(f64, Vec<f64>)> {
    single(state, config, LossTerm::Contact, &ScalePriors { humans: Vec::new(), objects: Vec::new() })
}

pub fn loss_normal(state: &SceneState, config: &SceneConfig) -> Result<(f64, Vec<f64>)> {
    single(state, config, LossTerm::Normal, &ScalePriors { humans: Vec::new(), objects: Vec::new() })
}

pub fn loss_penetration(state: &SceneState, config: &SceneConfig) -> Result<(f64, Vec<f64>)> {
    single(state, config, LossTerm::Penetration, &ScalePriors { humans: Vec::new(), objects: Vec::new() })
}

pub fn loss_scale(state: &SceneState, priors: &ScalePriors) -> Result<(f64, Vec<f64>)> {
    let mut grad = Grad::new(state);
    let v = scale(state, priors, &mut grad)?;
    Ok((v, grad.g))
}

pub fn loss_reprojection(state: &SceneState, config: &SceneConfig) -> Result<(f64, Vec<f64>)> {
    single(state, config, LossTerm::Reprojection, &ScalePriors { humans: Vec::new(), objects: Vec::new() })
}
