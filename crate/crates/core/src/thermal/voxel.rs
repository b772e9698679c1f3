use serde::{Deserialize, Serialize};

use crate::antenna_link::{AntennaSystem, UnitCell};
use crate::error::{Error, Result};
use crate::layered_em::LayerStack;
use crate::materials::MaterialDb;

/// Mesh controls for [`voxelize_unit_cell`]. Lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelOptions {
    /// z step in ordinary (structural) layers.
    pub z_step_mm: f64,
    /// z step in layers with λ below `insulation_threshold`.
    pub z_step_insulation_mm: f64,
    pub insulation_threshold: f64,
    pub z_step_laminate_mm: f64,
    pub z_step_foam_mm: f64,
    /// Every z step is divided by this factor (mesh-convergence studies).
    pub z_refine: usize,
    /// Lateral step across the cable.
    pub cable_step_mm: f64,
    /// Largest lateral step away from the cable.
    pub lateral_max_mm: f64,
    /// Geometric growth of lateral steps away from the cable.
    pub lateral_growth: f64,
}

impl Default for VoxelOptions {
    fn default() -> Self {
        Self {
            z_step_mm: 5.0,
            z_step_insulation_mm: 2.0,
            insulation_threshold: 0.1,
            z_step_laminate_mm: 0.5,
            z_step_foam_mm: 1.0,
            z_refine: 1,
            cable_step_mm: 0.2,
            lateral_max_mm: 8.0,
            lateral_growth: 1.4,
        }
    }
}

impl VoxelOptions {
    fn validate(&self) -> Result<()> {
        let steps = [
            self.z_step_mm,
            self.z_step_insulation_mm,
            self.z_step_laminate_mm,
            self.z_step_foam_mm,
            self.cable_step_mm,
            self.lateral_max_mm,
        ];
        if !steps.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("voxel steps must be finite and > 0"));
        }
        if self.z_refine == 0 || !(self.lateral_growth >= 1.0) {
            return Err(Error::invalid("z_refine must be >= 1 and lateral_growth >= 1"));
        }
        Ok(())
    }
}

/// Rectilinear voxel grid over one unit cell: x and y centred on the cable
/// axis, z from the outdoor face (0) to the indoor face.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    x_mm: Vec<f64>,
    y_mm: Vec<f64>,
    z_mm: Vec<f64>,
    ids: Vec<u16>,
    names: Vec<String>,
    conductivity: Vec<f64>,
}

impl VoxelGrid {
    /// `ids` is laid out x-major with z fastest: `(i·ny + j)·nz + k`.
    pub fn new(
        x_mm: Vec<f64>,
        y_mm: Vec<f64>,
        z_mm: Vec<f64>,
        names: Vec<String>,
        conductivity: Vec<f64>,
        ids: Vec<u16>,
    ) -> Result<Self> {
        for (axis, e) in [("x", &x_mm), ("y", &y_mm), ("z", &z_mm)] {
            if e.len() < 2 || !e.windows(2).all(|w| w[1] > w[0]) || !e.iter().all(|v| v.is_finite()) {
                return Err(Error::GridMismatch(format!("{axis} edges must be finite and strictly increasing")));
            }
        }
        if names.len() != conductivity.len() || names.is_empty() || names.len() > u16::MAX as usize {
            return Err(Error::GridMismatch("material table is inconsistent".into()));
        }
        if let Some(l) = conductivity.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("voxel conductivity {l} must be > 0")));
        }
        let n = (x_mm.len() - 1) * (y_mm.len() - 1) * (z_mm.len() - 1);
        if ids.len() != n {
            return Err(Error::GridMismatch(format!("{} material ids for {n} voxels", ids.len())));
        }
        if ids.iter().any(|&id| id as usize >= names.len()) {
            return Err(Error::GridMismatch("voxel refers to an unknown material id".into()));
        }
        Ok(Self { x_mm, y_mm, z_mm, ids, names, conductivity })
    }

    /// Laterally homogeneous grid of `stack` over an `sx × sy` footprint.
    pub fn from_stack(stack: &LayerStack, sx_mm: f64, sy_mm: f64, opts: &VoxelOptions) -> Result<Self> {
        let cell = UnitCell { size_x_mm: sx_mm, size_y_mm: sy_mm, stack: stack.clone(), system: None };
        voxelize_unit_cell(&cell, &MaterialDb::default(), opts)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x_mm.len() - 1, self.y_mm.len() - 1, self.z_mm.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn x_edges_mm(&self) -> &[f64] {
        &self.x_mm
    }

    pub fn y_edges_mm(&self) -> &[f64] {
        &self.y_mm
    }

    pub fn z_edges_mm(&self) -> &[f64] {
        &self.z_mm
    }

    pub fn material_names(&self) -> &[String] {
        &self.names
    }

    pub fn material_conductivities(&self) -> &[f64] {
        &self.conductivity
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let (_, ny, nz) = self.dims();
        (i * ny + j) * nz + k
    }

    pub fn material_id(&self, i: usize, j: usize, k: usize) -> u16 {
        self.ids[self.index(i, j, k)]
    }

    pub fn material_ids(&self) -> &[u16] {
        &self.ids
    }

    pub fn conductivity_at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.conductivity[self.material_id(i, j, k) as usize]
    }

    pub fn footprint_mm2(&self) -> f64 {
        (self.x_mm[self.x_mm.len() - 1] - self.x_mm[0]) * (self.y_mm[self.y_mm.len() - 1] - self.y_mm[0])
    }

    pub fn depth_mm(&self) -> f64 {
        self.z_mm[self.z_mm.len() - 1] - self.z_mm[0]
    }

    fn id_of(&self, name: &str) -> Option<u16> {
        self.names.iter().position(|n| n == name).map(|p| p as u16)
    }

    /// Give one voxel its own material (e.g. to perturb λ locally).
    pub fn set_voxel(&mut self, i: usize, j: usize, k: usize, name: &str, conductivity: f64) -> Result<()> {
        if !(conductivity > 0.0 && conductivity.is_finite()) {
            return Err(Error::invalid(format!("voxel conductivity {conductivity} must be > 0")));
        }
        let id = match self.id_of(name) {
            Some(id) if self.conductivity[id as usize] == conductivity => id,
            Some(_) => return Err(Error::invalid(format!("material `{name}` already has a different conductivity"))),
            None => {
                self.names.push(name.to_owned());
                self.conductivity.push(conductivity);
                (self.names.len() - 1) as u16
            }
        };
        let idx = self.index(i, j, k);
        self.ids[idx] = id;
        Ok(())
    }

    /// Area of material `name` in z-plane `k`, mm².
    pub fn cross_section_mm2(&self, name: &str, k: usize) -> f64 {
        let Some(id) = self.id_of(name) else { return 0.0 };
        let (nx, ny, _) = self.dims();
        let mut area = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                if self.material_id(i, j, k) == id {
                    area += (self.x_mm[i + 1] - self.x_mm[i]) * (self.y_mm[j + 1] - self.y_mm[j]);
                }
            }
        }
        area
    }

    /// Axis-aligned bounds `[(x0, x1), (y0, y1), (z0, z1)]` of all voxels of `name`.
    pub fn bounds_of(&self, name: &str) -> Option<[(f64, f64); 3]> {
        let id = self.id_of(name)?;
        let (nx, ny, nz) = self.dims();
        let mut b: Option<[(f64, f64); 3]> = None;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if self.material_id(i, j, k) != id {
                        continue;
                    }
                    let v = [
                        (self.x_mm[i], self.x_mm[i + 1]),
                        (self.y_mm[j], self.y_mm[j + 1]),
                        (self.z_mm[k], self.z_mm[k + 1]),
                    ];
                    b = Some(match b {
                        None => v,
                        Some(cur) => std::array::from_fn(|a| (cur[a].0.min(v[a].0), cur[a].1.max(v[a].1))),
                    });
                }
            }
        }
        b
    }
}

/// Edges on `[-half, half]`, symmetric about 0. Breakpoints inside
/// `fine_extent` are meshed uniformly at `h0`; beyond it the step grows
/// geometrically up to `hmax`, always landing exactly on breakpoints.
fn graded_axis(half: f64, breakpoints: &[f64], fine_extent: f64, h0: f64, hmax: f64, growth: f64) -> Vec<f64> {
    let mut pos: Vec<f64> = breakpoints.iter().map(|p| p.abs()).filter(|&p| p > 1e-9 && p < half - 1e-9).collect();
    pos.push(half);
    pos.sort_by(f64::total_cmp);
    pos.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut lines = vec![0.0];
    let mut cur = 0.0;
    let mut h = h0.min(hmax);
    for bp in pos {
        if bp <= fine_extent + 1e-9 {
            let n = ((bp - cur) / h0 - 1e-9).ceil().max(1.0) as usize;
            lines.extend((1..=n).map(|s| cur + (bp - cur) * s as f64 / n as f64));
        } else {
            while bp - cur > 1e-9 {
                h = (h * growth).min(hmax);
                let rest = bp - cur;
                let step = if rest <= h {
                    rest
                } else if rest < 2.0 * h {
                    rest / 2.0
                } else {
                    h
                };
                let next = if rest - step < 1e-9 { bp } else { cur + step };
                lines.push(next);
                cur = next;
                continue;
            }
        }
        cur = bp;
        *lines.last_mut().unwrap() = bp;
    }
    let mut full: Vec<f64> = lines.iter().rev().filter(|&&x| x > 0.0).map(|x| -x).collect();
    full.extend(lines);
    full
}

fn uniform(edges: &mut Vec<f64>, to: f64, step: f64) {
    let from = *edges.last().unwrap();
    let n = ((to - from) / step - 1e-9).ceil().max(1.0) as usize;
    edges.extend((1..n).map(|s| from + (to - from) * s as f64 / n as f64));
    edges.push(to);
}

/// Geometry of the embedded system resolved to lengths in mm.
struct Features {
    /// Outer side of each square coax tube (equal outer area).
    tube: f64,
    /// Side of the dielectric core, leaving the exact metal area.
    core: f64,
    laminate_half: f64,
    laminate_t: f64,
    foam_half: f64,
    foam_t: f64,
}

impl Features {
    fn new(sys: &AntennaSystem) -> Result<Self> {
        let tube = sys.coax.outer_area_mm2().sqrt();
        let core_sq = tube * tube - sys.coax.conductor_area_mm2();
        if !(core_sq > 0.0) {
            return Err(Error::Geometry("coax metal area exceeds its cross-section".into()));
        }
        Ok(Self {
            tube,
            core: core_sq.sqrt(),
            laminate_half: sys.antenna.laminate_size_mm / 2.0,
            laminate_t: sys.antenna.laminate_thickness_mm,
            foam_half: sys.foam.size_mm / 2.0,
            foam_t: sys.foam.thickness_mm,
        })
    }

    /// Tube centres sit at `x = ±tube/2`, `y = 0`: the pair touches along x = 0.
    fn x_breaks(&self) -> Vec<f64> {
        let w = (self.tube - self.core) / 2.0;
        vec![w, self.tube - w, self.tube, self.laminate_half, self.foam_half]
    }

    fn y_breaks(&self) -> Vec<f64> {
        vec![self.core / 2.0, self.tube / 2.0, self.laminate_half, self.foam_half]
    }

    fn in_tube(&self, x: f64, y: f64) -> bool {
        x.abs() < self.tube && y.abs() < self.tube / 2.0
    }

    fn in_core(&self, x: f64, y: f64) -> bool {
        (x.abs() - self.tube / 2.0).abs() < self.core / 2.0 && y.abs() < self.core / 2.0
    }
}

/// Discretise a unit cell. Each coax line becomes a square tube with the
/// line's outer area and exactly its metal (pin + shield) area, so axial
/// conductance is preserved; the laminate sits flush with each wall face and
/// the foam block directly behind it. Cable, laminate and foam materials are
/// looked up in `db`; wall materials come from the stack.
pub fn voxelize_unit_cell(cell: &UnitCell, db: &MaterialDb, opts: &VoxelOptions) -> Result<VoxelGrid> {
    opts.validate()?;
    if !(cell.size_x_mm > 0.0 && cell.size_y_mm > 0.0) {
        return Err(Error::Geometry("cell dimensions must be > 0".into()));
    }
    if cell.system.is_some() {
        cell.validate()?;
    }
    let (hx, hy) = (cell.size_x_mm / 2.0, cell.size_y_mm / 2.0);
    let layers = cell.stack.layers();

    let mut names: Vec<String> = Vec::new();
    let mut conductivity = Vec::new();
    let mut intern = |name: &str, lambda: f64| -> u16 {
        match names.iter().position(|n| n == name) {
            Some(p) => p as u16,
            None => {
                names.push(name.to_owned());
                conductivity.push(lambda);
                (names.len() - 1) as u16
            }
        }
    };
    let layer_ids: Vec<u16> =
        layers.iter().map(|l| intern(&l.material.name, l.material.thermal_conductivity)).collect();

    let features = cell.system.as_ref().map(Features::new).transpose()?;
    let feature_ids = match &cell.system {
        Some(sys) => {
            let mut id = |n: &str| -> Result<u16> { Ok(intern(n, db.get(n)?.thermal_conductivity)) };
            Some([
                id(&sys.coax.conductor_material)?,
                id(&sys.coax.dielectric_material)?,
                id(&sys.antenna.laminate_material)?,
                id(&sys.foam.material)?,
            ])
        }
        None => None,
    };

    let refine = opts.z_refine as f64;
    let layer_step = |lambda: f64| {
        if lambda < opts.insulation_threshold {
            opts.z_step_insulation_mm
        } else {
            opts.z_step_mm
        }
    };
    let mut z = vec![0.0];
    let mut layer_top = Vec::with_capacity(layers.len());
    let mut z0 = 0.0;
    let depth = cell.stack.total_thickness_mm();
    for (n, l) in layers.iter().enumerate() {
        let z1 = z0 + l.thickness_mm;
        let step = layer_step(l.material.thermal_conductivity) / refine;
        match &features {
            Some(f) => {
                let band = f.laminate_t + f.foam_t;
                let (outer, inner) = (n == 0, n + 1 == layers.len());
                let needed = band * (outer as u8 + inner as u8) as f64;
                if needed >= l.thickness_mm {
                    return Err(Error::Geometry(format!(
                        "laminate and foam ({band} mm) do not fit inside layer {n} ({} mm)",
                        l.thickness_mm
                    )));
                }
                if outer {
                    uniform(&mut z, f.laminate_t, opts.z_step_laminate_mm / refine);
                    uniform(&mut z, band, opts.z_step_foam_mm / refine);
                }
                if inner {
                    uniform(&mut z, depth - band, step);
                    uniform(&mut z, depth - f.laminate_t, opts.z_step_foam_mm / refine);
                    uniform(&mut z, depth, opts.z_step_laminate_mm / refine);
                } else {
                    uniform(&mut z, z1, step);
                }
            }
            None => uniform(&mut z, z1, step),
        }
        layer_top.push(z1);
        z0 = z1;
    }
    *z.last_mut().unwrap() = depth;

    let (x, y) = match &features {
        Some(f) => {
            if f.foam_half >= hx.min(hy) || f.laminate_half >= hx.min(hy) || 2.0 * f.tube >= hx.min(hy) * 2.0 {
                return Err(Error::Geometry(format!(
                    "embedded features exceed the {}×{} mm cell",
                    cell.size_x_mm, cell.size_y_mm
                )));
            }
            let x =
                graded_axis(hx, &f.x_breaks(), f.tube, opts.cable_step_mm, opts.lateral_max_mm, opts.lateral_growth);
            let y = graded_axis(
                hy,
                &f.y_breaks(),
                f.tube / 2.0,
                opts.cable_step_mm,
                opts.lateral_max_mm,
                opts.lateral_growth,
            );
            let widest = |e: &[f64], lim: f64| {
                e.windows(2)
                    .filter(|w| w[0] >= -lim - 1e-9 && w[1] <= lim + 1e-9)
                    .map(|w| w[1] - w[0])
                    .fold(0.0, f64::max)
            };
            if widest(&x, f.tube) > f.tube / 2.0 || widest(&y, f.tube / 2.0) > f.tube / 2.0 {
                return Err(Error::Geometry(format!(
                    "cable ({:.3} mm) is not resolved by at least two voxels; reduce cable_step_mm",
                    f.tube
                )));
            }
            (x, y)
        }
        None => {
            let axis = |h: f64| {
                let n = (2.0 * h / opts.lateral_max_mm).ceil().max(1.0) as usize;
                (0..=n).map(|s| -h + 2.0 * h * s as f64 / n as f64).collect::<Vec<_>>()
            };
            (axis(hx), axis(hy))
        }
    };

    let centres = |e: &[f64]| e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>();
    let (xc, yc, zc) = (centres(&x), centres(&y), centres(&z));
    let base: Vec<u16> =
        zc.iter().map(|&zz| layer_ids[layer_top.partition_point(|&t| t <= zz).min(layers.len() - 1)]).collect();

    let mut ids = Vec::with_capacity(xc.len() * yc.len() * zc.len());
    for &xx in &xc {
        for &yy in &yc {
            for (k, &zz) in zc.iter().enumerate() {
                let id = match (&features, feature_ids) {
                    (Some(f), Some([metal, core, laminate, foam])) => {
                        let from_face = zz.min(depth - zz);
                        if f.in_tube(xx, yy) {
                            if f.in_core(xx, yy) {
                                core
                            } else {
                                metal
                            }
                        } else if from_face < f.laminate_t && xx.abs() < f.laminate_half && yy.abs() < f.laminate_half {
                            laminate
                        } else if from_face < f.laminate_t + f.foam_t
                            && from_face > f.laminate_t
                            && xx.abs() < f.foam_half
                            && yy.abs() < f.foam_half
                        {
                            foam
                        } else {
                            base[k]
                        }
                    }
                    _ => base[k],
                };
                ids.push(id);
            }
        }
    }
    VoxelGrid::new(x, y, z, names, conductivity, ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::builtin_database;

    fn wall() -> LayerStack {
        LayerStack::load_bearing_wall(&builtin_database()).unwrap()
    }

    #[test]
    fn axis_hits_breakpoints_and_is_symmetric() {
        let e = graded_axis(75.0, &[0.19, 1.37, 1.56, 20.0, 25.0], 1.56, 0.2, 8.0, 1.4);
        for bp in [0.19, 1.37, 1.56, 20.0, 25.0, 75.0] {
            assert!(e.iter().any(|x| (x - bp).abs() < 1e-12), "{bp} missing");
            assert!(e.iter().any(|x| (x + bp).abs() < 1e-12));
        }
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert!(e.windows(2).all(|w| w[1] - w[0] <= 8.0 + 1e-9));
    }

    #[test]
    fn bare_cell_is_three_slabs() {
        let g = VoxelGrid::from_stack(&wall(), 150.0, 150.0, &VoxelOptions::default()).unwrap();
        assert_eq!(g.material_names(), ["concrete", "rockwool"]);
        assert!((g.depth_mm() - 440.0).abs() < 1e-12);
        assert!((g.footprint_mm2() - 22500.0).abs() < 1e-9);
        assert!(g.z_edges_mm().iter().any(|z| (z - 70.0).abs() < 1e-12));
        assert!(g.z_edges_mm().iter().any(|z| (z - 290.0).abs() < 1e-12));
    }

    #[test]
    fn steel_area_matches_dual_coax() {
        let db = builtin_database();
        let cell = UnitCell::with_default_system(wall(), 150.0);
        let g = voxelize_unit_cell(&cell, &db, &VoxelOptions::default()).unwrap();
        let (_, _, nz) = g.dims();
        for k in [0, nz / 2, nz - 1] {
            let a = g.cross_section_mm2("stainless_steel", k);
            assert!((a / (2.0 * 1.045) - 1.0).abs() < 0.05, "plane {k}: {a}");
        }
        assert!((g.depth_mm() - 440.0).abs() < 1e-12);
    }

    #[test]
    fn foam_stays_inside_outer_concrete() {
        let db = builtin_database();
        let cell = UnitCell::with_default_system(wall(), 70.0);
        let g = voxelize_unit_cell(&cell, &db, &VoxelOptions::default()).unwrap();
        let [bx, by, bz] = g.bounds_of("foam_backing").unwrap();
        assert!(bx.0 > -35.0 && bx.1 < 35.0 && by.0 > -35.0 && by.1 < 35.0);
        // Both blocks: z within the outer 70 mm or the inner 150 mm concrete.
        assert!(bz.0 > 0.0 && bz.1 < 440.0);
        let (nx, ny, nz) = g.dims();
        let foam = g.material_names().iter().position(|n| n == "foam_backing").unwrap() as u16;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if g.material_id(i, j, k) == foam {
                        let z = 0.5 * (g.z_edges_mm()[k] + g.z_edges_mm()[k + 1]);
                        assert!(!(70.0..=290.0).contains(&z));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_features() {
        let db = builtin_database();
        let mut cell = UnitCell::with_default_system(wall(), 45.0);
        assert!(matches!(voxelize_unit_cell(&cell, &db, &VoxelOptions::default()), Err(Error::Geometry(_))));
        cell = UnitCell::with_default_system(wall(), 150.0);
        cell.system.as_mut().unwrap().foam.thickness_mm = 80.0;
        assert!(matches!(voxelize_unit_cell(&cell, &db, &VoxelOptions::default()), Err(Error::Geometry(_))));
    }

    #[test]
    fn rejects_unresolved_cable() {
        let db = builtin_database();
        let cell = UnitCell::with_default_system(wall(), 150.0);
        let opts = VoxelOptions { cable_step_mm: 5.0, ..Default::default() };
        assert!(matches!(voxelize_unit_cell(&cell, &db, &opts), Err(Error::Geometry(_))));
    }

    #[test]
    fn grid_validation() {
        let ok = VoxelGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], vec!["a".into()], vec![1.0], vec![0]);
        assert!(ok.is_ok());
        let bad = VoxelGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], vec!["a".into()], vec![1.0], vec![1]);
        assert!(bad.is_err());
        let bad = VoxelGrid::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec!["a".into()], vec![1.0], vec![0]);
        assert!(bad.is_err());
    }
}
