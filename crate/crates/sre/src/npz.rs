//! NPZ archives (ZIP of NPY members) and MedMNIST-layout datasets.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use sre_core::data::{Labels, LabeledDataset, Split};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::npy::{read_npy, write_npy, NpyArray, NpyDtype};
use crate::{Error, Result};

/// Members in archive order, names without the `.npy` suffix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Npz {
    pub members: Vec<(String, NpyArray)>,
}

impl Npz {
    pub fn get(&self, name: &str) -> Option<&NpyArray> {
        self.members.iter().find(|(n, _)| n == name).map(|(_, a)| a)
    }

    pub fn push(&mut self, name: impl Into<String>, array: NpyArray) {
        self.members.push((name.into(), array));
    }
}

pub fn read_npz_bytes(bytes: &[u8]) -> Result<Npz> {
    let mut archive = ZipArchive::new(Cursor::new(bytes)).map_err(|e| Error::Zip(e.to_string()))?;
    let mut members = Vec::with_capacity(archive.len());
    for i in 0..archive.len() {
        let mut file = archive.by_index(i).map_err(|e| Error::Zip(e.to_string()))?;
        if file.is_dir() {
            continue;
        }
        let name = file.name().to_string();
        let mut buf = Vec::with_capacity(file.size() as usize);
        file.read_to_end(&mut buf).map_err(|e| Error::Zip(format!("{name}: {e}")))?;
        let array = read_npy(&buf).map_err(|source| Error::Npy {
            member: name.clone(),
            source,
        })?;
        let key = name.strip_suffix(".npy").unwrap_or(&name).to_string();
        members.push((key, array));
    }
    Ok(Npz { members })
}

pub fn read_npz(path: &Path) -> Result<Npz> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_npz_bytes(&bytes)
}

/// Deflated members with a fixed timestamp, so equal input gives equal bytes.
pub fn write_npz_bytes(npz: &Npz) -> Result<Vec<u8>> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default());
    for (name, array) in &npz.members {
        zip.start_file(format!("{name}.npy"), options)
            .map_err(|e| Error::Zip(e.to_string()))?;
        zip.write_all(&write_npy(array)).map_err(|e| Error::Zip(e.to_string()))?;
    }
    let cursor = zip.finish().map_err(|e| Error::Zip(e.to_string()))?;
    Ok(cursor.into_inner())
}

pub fn write_npz(path: &Path, npz: &Npz) -> Result<()> {
    std::fs::write(path, write_npz_bytes(npz)?).map_err(|e| Error::io(path, e))
}

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Loads the six MedMNIST keys `{train,val,test}_{images,labels}`.
///
/// Image rank decides the dimensionality: `[N,H,W]` and `[N,H,W,C]` (C ≤ 4)
/// are 2D, `[N,D,H,W]` and `[N,D,H,W,C]` are 3D. Labels of shape `[N]` or
/// `[N,1]` are class indices; `[N,K]` with `K > 1` is a multi-label matrix.
pub fn dataset_from_npz(npz: &Npz, name: &str) -> Result<LabeledDataset> {
    let mut arrays = Vec::new();
    for split in SPLITS {
        let images = npz
            .get(&format!("{split}_images"))
            .ok_or_else(|| Error::MissingKey(format!("{split}_images")))?;
        let labels = npz
            .get(&format!("{split}_labels"))
            .ok_or_else(|| Error::MissingKey(format!("{split}_labels")))?;
        arrays.push((images, labels));
    }
    let dims = image_dims(arrays[0].0)?;
    let multi = arrays[0].1.shape().len() == 2 && arrays[0].1.shape()[1] > 1;
    let mut raw = Vec::new();
    for (images, labels) in &arrays {
        let values = labels.integers().map_err(|source| Error::Npy {
            member: "labels".into(),
            source,
        })?;
        if let Some(&v) = values.iter().find(|&&v| v < 0) {
            return Err(Error::Data(format!("negative label {v}")));
        }
        raw.push((images, labels.shape().to_vec(), values));
    }
    let num_classes = if multi {
        arrays[0].1.shape()[1]
    } else {
        raw.iter().flat_map(|(_, _, v)| v.iter()).max().map_or(1, |&m| m as usize + 1)
    };
    let mut splits = Vec::new();
    for (images, shape, values) in raw {
        if image_dims(images)? != dims {
            return Err(Error::Data("splits disagree on image dimensionality".into()));
        }
        let labels = if multi {
            if shape.len() != 2 || shape[1] != num_classes || values.iter().any(|&v| v > 1) {
                return Err(Error::Data("multi-label matrices must be binary [N, K] with one K".into()));
            }
            Labels::MultiLabel {
                values: values.iter().map(|&v| v as u8).collect(),
                num_labels: num_classes,
            }
        } else {
            if shape.len() > 2 || (shape.len() == 2 && shape[1] != 1) {
                return Err(Error::Data(format!("class labels of shape {shape:?}")));
            }
            Labels::Classes {
                values: values.iter().map(|&v| v as usize).collect(),
                num_classes,
            }
        };
        let pixels = images.as_u8().map_err(|source| Error::Npy {
            member: "images".into(),
            source,
        })?;
        if images.shape().first() == Some(&0) {
            splits.push(None);
        } else {
            splits.push(Some(Split::new(dims, images.shape().to_vec(), pixels.to_vec(), labels)?));
        }
    }
    let mut it = splits.into_iter();
    let (train, val, test) = (it.next().flatten(), it.next().flatten(), it.next().flatten());
    let (Some(train), Some(test)) = (train, test) else {
        return Err(Error::Data("train and test splits must not be empty".into()));
    };
    Ok(LabeledDataset {
        name: name.to_string(),
        train,
        val,
        test,
    })
}

fn image_dims(images: &NpyArray) -> Result<usize> {
    let s = images.shape();
    match s.len() {
        3 => Ok(2),
        4 if s[3] <= 4 && s[3] < s[1] => Ok(2),
        4 | 5 => Ok(3),
        _ => Err(Error::Data(format!("image array of shape {s:?}"))),
    }
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    if !path.exists() {
        return Err(Error::DatasetNotFound(path.to_path_buf()));
    }
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    dataset_from_npz(&read_npz(path)?, &name)
}

/// MedMNIST-layout archive of a dataset; a missing val split is written empty.
pub fn dataset_to_npz(data: &LabeledDataset) -> Result<Npz> {
    let mut npz = Npz::default();
    for name in SPLITS {
        let split = match data.split(name) {
            Some(s) => s.clone(),
            None => empty_like(&data.train),
        };
        npz.push(
            format!("{name}_images"),
            NpyArray::from_bytes(NpyDtype::U8, split.shape.clone(), split.pixels.clone())?,
        );
        let labels = match &split.labels {
            Labels::Classes { values, .. } => {
                let v: Vec<i64> = values.iter().map(|&v| v as i64).collect();
                NpyArray::from_i64(vec![v.len(), 1], &v)?
            }
            Labels::MultiLabel { values, num_labels } => {
                let v: Vec<i64> = values.iter().map(|&v| v as i64).collect();
                NpyArray::from_i64(vec![v.len() / num_labels, *num_labels], &v)?
            }
        };
        npz.push(format!("{name}_labels"), labels);
    }
    Ok(npz)
}

fn empty_like(split: &Split) -> Split {
    let mut shape = split.shape.clone();
    shape[0] = 0;
    Split {
        shape,
        pixels: Vec::new(),
        labels: split.labels.select(&[]),
        dims: split.dims,
    }
}
