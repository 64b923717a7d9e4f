//! Synthetic test shapes: a symmetric cross, an asymmetric planar set, a
//! small 3D "molecule" and digit-like grayscale blobs, plus rotated and
//! stretched copies.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::io::GrayImage;
use crate::shape::Shape;

pub fn cross() -> Shape {
    Shape::uniform_points(2, vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]).expect("valid cross")
}

pub fn asymmetric_2d() -> Shape {
    Shape::from_points(
        2,
        vec![0.0, 0.0, 2.0, 0.1, 0.3, 1.0, 3.1, 2.2, -1.0, 1.6, 1.2, -0.8],
        vec![1.0, 2.0, 1.5, 0.5, 1.0, 0.8],
    )
    .expect("valid points")
}

/// Ten-atom asymmetric 3D point set.
pub fn molecule_3d() -> Shape {
    Shape::uniform_points(
        3,
        vec![
            0.0, 0.0, 0.0, //
            1.4, 0.1, 0.0, //
            2.1, 1.3, 0.2, //
            1.5, 2.5, 0.1, //
            0.1, 2.4, -0.3, //
            -0.6, 1.2, -0.2, //
            3.5, 1.4, 0.9, //
            -2.0, 1.1, -1.2, //
            2.0, -1.0, -0.5, //
            0.5, 3.6, 1.4,
        ],
    )
    .expect("valid points")
}

/// Counter-clockwise rotation in 2D.
pub fn rotation_2d(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Rotation about a unit axis (Rodrigues).
pub fn rotation_3d(axis: [f64; 3], theta: f64) -> DMatrix<f64> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]);
    DMatrix::identity(3, 3) + &k * theta.sin() + (&k * &k) * (1.0 - theta.cos())
}

/// Exact quarter turn `(x, y) -> (-y, x)`.
pub fn quarter_turn() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Stretch of the first axis by `factor`.
pub fn stretch(dim: usize, factor: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(dim, dim);
    m[(0, 0)] = factor;
    m
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
/// Determinant may be -1.
pub fn random_orthogonal<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random proper rotation.
pub fn random_rotation<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let mut q = random_orthogonal(rng, dim);
    if q.determinant() < 0.0 {
        for i in 0..dim {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// `n` points uniform in `[-1, 1]^dim` with weights uniform in `[0.5, 1.5]`.
pub fn random_shape<R: Rng>(rng: &mut R, dim: usize, n: usize) -> Shape {
    let coords = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    Shape::from_points(dim, coords, weights).expect("positive weights")
}

/// Anisotropic Gaussian stroke on the image plane.
#[derive(Clone, Copy, Debug)]
pub struct Stroke {
    pub cx: f64,
    pub cy: f64,
    pub sx: f64,
    pub sy: f64,
    pub angle: f64,
    pub amplitude: f64,
}

/// Renders strokes on a `size x size` canvas, pixel `(row, col)` centered at
/// `(col, size - 1 - row)`, quantized to 8 bits.
pub fn render_blob(size: usize, strokes: &[Stroke]) -> GrayImage {
    let mut field = vec![0.0; size * size];
    for (k, v) in field.iter_mut().enumerate() {
        let x = (k % size) as f64;
        let y = (k / size) as f64;
        *v = strokes
            .iter()
            .map(|s| {
                let (sn, cs) = s.angle.sin_cos();
                let dx = x - s.cx;
                let dy = y - s.cy;
                let u = cs * dx + sn * dy;
                let w = -sn * dx + cs * dy;
                s.amplitude * (-0.5 * (u * u / (s.sx * s.sx) + w * w / (s.sy * s.sy))).exp()
            })
            .sum();
    }
    GrayImage::from_field([size, size], &field, 255, 1.0, true).expect("square field")
}

/// Digit-like 28x28 blobs built from a few strokes each.
pub fn blob_images() -> Vec<(&'static str, GrayImage)> {
    let s = |cx, cy, sx, sy, angle, amplitude| Stroke {
        cx,
        cy,
        sx,
        sy,
        angle,
        amplitude,
    };
    vec![
        (
            "blob_seven",
            render_blob(
                28,
                &[
                    s(13.0, 20.0, 5.0, 1.3, 0.0, 1.0),
                    s(14.5, 12.0, 6.5, 1.3, 1.2, 1.0),
                ],
            ),
        ),
        (
            "blob_ring",
            render_blob(
                28,
                &[
                    s(10.0, 14.0, 1.4, 5.0, 0.1, 1.0),
                    s(17.0, 14.0, 1.4, 5.0, -0.1, 0.9),
                    s(13.5, 19.5, 4.0, 1.3, 0.0, 0.8),
                    s(13.5, 8.5, 4.0, 1.3, 0.0, 0.8),
                ],
            ),
        ),
        (
            "blob_one",
            render_blob(28, &[s(14.0, 14.0, 1.5, 7.0, 0.25, 1.0), s(12.0, 19.0, 2.5, 1.2, -0.6, 0.6)]),
        ),
    ]
}

/// The image turned a quarter counter-clockwise (exact lattice permutation).
pub fn rotate_image_quarter(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let mut pixels = vec![0u32; w * h];
    // new image is h wide and w tall; new(row, col) = old(col, w - 1 - row)
    for row in 0..w {
        for col in 0..h {
            pixels[row * h + col] = img.pixels[col * w + (w - 1 - row)];
        }
    }
    GrayImage {
        width: h,
        height: w,
        maxval: img.maxval,
        pixels,
    }
}

pub fn rotated(shape: &Shape, m: &DMatrix<f64>) -> Result<Shape> {
    shape.transformed(m)
}
