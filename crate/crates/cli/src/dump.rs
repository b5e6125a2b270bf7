//! Debug images for the intermediate per-frame maps.

use std::path::Path;

use pantrack::frame::round_gray;
use pantrack::sequence_io::write_pgm;
use pantrack::{FrameResult, Plane, Result};

pub struct Toggles {
    pub background: bool,
    pub foreground: bool,
    pub blobs: bool,
}

impl Toggles {
    pub fn any(&self) -> bool {
        self.background || self.foreground || self.blobs
    }
}

fn save(dir: &Path, name: &str, frame: usize, plane: &Plane<u8>) -> Result<()> {
    write_pgm(
        dir.join(format!("{name}_{frame:04}.pgm")),
        plane.width,
        plane.height,
        &plane.data,
    )
}

fn gray(plane: &Plane<f64>) -> Plane<u8> {
    Plane {
        width: plane.width,
        height: plane.height,
        data: plane.data.iter().map(|&v| round_gray(v)).collect(),
    }
}

pub fn write(dir: &Path, on: &Toggles, eta: usize, res: &FrameResult) -> Result<()> {
    let f = res.frame_index;
    if on.background {
        let bg = &res.background;
        save(dir, "background", f, &gray(&bg.background))?;
        save(dir, "dissimilarity", f, &gray(&bg.dissimilarity))?;
        // full agreement maps to white
        let step = 255 / (eta - 1).max(1);
        let weight = Plane {
            width: bg.weight.width,
            height: bg.weight.height,
            data: bg.weight.data.iter().map(|&w| (w as usize * step).min(255) as u8).collect(),
        };
        save(dir, "weight", f, &weight)?;
    }
    if on.foreground {
        save(dir, "difference", f, &gray(&res.foreground))?;
        let mask = Plane {
            width: res.mask.width,
            height: res.mask.height,
            data: res.mask.data.iter().map(|&m| m * 255).collect(),
        };
        save(dir, "mask", f, &mask)?;
    }
    if on.blobs {
        // dilation 80, mask blob 160, refined region 255
        let mut img = Plane::filled(res.mask.width, res.mask.height, 0u8);
        for r in &res.refinements {
            for &(y, x) in r.dilated.pixels() {
                img.set(y, x, img.at(y, x).max(80));
            }
            for &(y, x) in r.original.pixels() {
                img.set(y, x, img.at(y, x).max(160));
            }
            if let Some(refined) = &r.refined {
                for &(y, x) in refined.pixels() {
                    img.set(y, x, 255);
                }
            }
        }
        save(dir, "blobs", f, &img)?;
    }
    Ok(())
}
