use super::image::{Domain, Image};

/// Box-filter downscale so neither side exceeds `max_side`. Smaller images
/// are returned unchanged.
pub fn downscale_to_fit<D: Domain>(img: &Image<D>, max_side: usize) -> Image<D> {
    let (w, h, c) = img.dims();
    let max_side = max_side.max(1);
    if w <= max_side && h <= max_side {
        return img.clone();
    }
    let f = w.max(h) as f64 / max_side as f64;
    let ow = ((w as f64 / f).round() as usize).clamp(1, max_side);
    let oh = ((h as f64 / f).round() as usize).clamp(1, max_side);
    let span = |o: usize, n: usize, on: usize| {
        let lo = o * n / on;
        let hi = ((o + 1) * n / on).max(lo + 1).min(n);
        lo..hi
    };
    Image::from_fn(ow, oh, c, |x, y, px| {
        let (xs, ys) = (span(x, w, ow), span(y, h, oh));
        let n = (xs.len() * ys.len()) as f32;
        for sy in ys {
            for sx in xs.clone() {
                for (o, v) in px.iter_mut().zip(img.pixel(sx, sy)) {
                    *o += v;
                }
            }
        }
        for o in px.iter_mut() {
            *o /= n;
        }
    })
    .expect("non-empty output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::EncodedImage;

    #[test]
    fn fits_and_averages() {
        let img = EncodedImage::from_fn(8, 4, 1, |x, _, px| px[0] = (x % 2) as f32).unwrap();
        let small = downscale_to_fit(&img, 4);
        assert_eq!(small.dims(), (4, 2, 1));
        assert!(small.data().iter().all(|&v| v == 0.5));
        assert_eq!(downscale_to_fit(&img, 8), img);
        let odd = EncodedImage::zeros(1000, 333, 3).unwrap();
        assert_eq!(downscale_to_fit(&odd, 512).dims(), (512, 170, 3));
    }
}
