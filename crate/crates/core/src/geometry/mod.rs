//! Dense raster domains with per-node types.

mod generate;
mod io;

pub use generate::{generate, GeneratorSpec, Obstacle};
pub use io::{load_geometry, read_geometry, save_geometry, write_geometry, GeometryFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NodeType {
    Solid = 0,
    Fluid = 1,
    VelocityBc = 2,
    PressureBc = 3,
}

impl NodeType {
    #[inline]
    pub fn is_solid(self) -> bool {
        self == NodeType::Solid
    }

    pub fn is_boundary(self) -> bool {
        matches!(self, NodeType::VelocityBc | NodeType::PressureBc)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NodeType::Solid),
            1 => Some(NodeType::Fluid),
            2 => Some(NodeType::VelocityBc),
            3 => Some(NodeType::PressureBc),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            NodeType::Solid => '#',
            NodeType::Fluid => '.',
            NodeType::VelocityBc => 'V',
            NodeType::PressureBc => 'P',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '#' => Some(NodeType::Solid),
            '.' => Some(NodeType::Fluid),
            'V' => Some(NodeType::VelocityBc),
            'P' => Some(NodeType::PressureBc),
            _ => None,
        }
    }
}

/// Global boundary parameters: one prescribed velocity shared by every
/// `VelocityBc` node and one prescribed density shared by every `PressureBc`
/// node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParams {
    pub velocity: [f64; 3],
    pub density: f64,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            velocity: [0.0; 3],
            density: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    d: usize,
    dims: [usize; 3],
    types: Vec<NodeType>,
    pub bc: BoundaryParams,
}

impl Geometry {
    /// All-`fill` 2D domain of `nx × ny` nodes.
    pub fn new_2d(nx: usize, ny: usize, fill: NodeType) -> Self {
        Self::filled(2, [nx, ny, 1], fill)
    }

    pub fn new_3d(nx: usize, ny: usize, nz: usize, fill: NodeType) -> Self {
        Self::filled(3, [nx, ny, nz], fill)
    }

    fn filled(d: usize, dims: [usize; 3], fill: NodeType) -> Self {
        Geometry {
            d,
            dims,
            types: vec![fill; dims.iter().product()],
            bc: BoundaryParams::default(),
        }
    }

    /// Builds a geometry from a row-major (x fastest) type array.
    pub fn from_types(d: usize, dims: [usize; 3], types: Vec<NodeType>) -> crate::Result<Self> {
        if d != 2 && d != 3 {
            return Err(crate::Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}")));
        }
        if d == 2 && dims[2] != 1 {
            return Err(crate::Error::InvalidParameter("2D geometry must have nz = 1".into()));
        }
        let expected: usize = dims.iter().product();
        if types.len() != expected {
            return Err(crate::Error::DimensionMismatch {
                expected,
                found: types.len(),
            });
        }
        Ok(Geometry {
            d,
            dims,
            types,
            bc: BoundaryParams::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `[nx, ny, nz]`, with `nz = 1` in 2D.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_nodes(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> NodeType {
        self.types[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, t: NodeType) {
        let i = self.index(x, y, z);
        self.types[i] = t;
    }

    /// Number of non-solid (fluid and boundary) nodes.
    pub fn n_fnodes(&self) -> usize {
        self.types.iter().filter(|t| !t.is_solid()).count()
    }

    pub fn n_snodes(&self) -> usize {
        self.n_nodes() - self.n_fnodes()
    }

    pub fn porosity(&self) -> (f64, f64) {
        porosity(self)
    }
}

/// Returns `(ϕ, η)`: the non-solid and solid node fractions.
pub fn porosity(g: &Geometry) -> (f64, f64) {
    let n = g.n_nodes();
    if n == 0 {
        return (0.0, 0.0);
    }
    let fluid = g.n_fnodes();
    let phi = fluid as f64 / n as f64;
    let eta = (n - fluid) as f64 / n as f64;
    (phi, eta)
}
