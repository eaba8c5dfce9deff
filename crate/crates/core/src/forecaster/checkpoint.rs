//! Plain-text model checkpoints.
//!
//! Layout, one item per line:
//!
//! ```text
//! hybridcast-lstm 1
//! num_layers <int>
//! units <int>
//! dropout_rate <f64>
//! mode bilstm|lstm
//! input_dim <int>
//! window_length <int>
//! seed <u64>
//! best_epoch <int>
//! train_loss <count> <f64>...
//! val_loss <count> <f64>...
//! tensor <name> <rows> <cols>
//! <rows*cols f64 values, row-major, space separated>
//! ...
//! end
//! ```
//!
//! Tensors appear in the canonical order of `NetworkParams::tensors`.
//! Floats use Rust's shortest round-trip formatting, so save/load is
//! bit-exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::network::NetworkParams;
use super::train::TrainedModel;
use super::{ForecastError, NetworkSpec, Result};

const MAGIC: &str = "hybridcast-lstm 1";

fn io(e: std::io::Error) -> ForecastError {
    ForecastError::Io(e.to_string())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_checkpoint<W: Write>(model: &TrainedModel, mut out: W) -> Result<()> {
    let s = &model.spec;
    let mut text = format!(
        "{MAGIC}\nnum_layers {}\nunits {}\ndropout_rate {}\nmode {}\ninput_dim {}\nwindow_length {}\nseed {}\nbest_epoch {}\n",
        s.num_layers, s.units, s.dropout_rate, s.mode, s.input_dim, s.window_length, model.seed, model.best_epoch
    );
    text += &format!("train_loss {} {}\n", model.train_loss.len(), join(&model.train_loss));
    text += &format!("val_loss {} {}\n", model.val_loss.len(), join(&model.val_loss));
    for t in model.params.tensors() {
        text += &format!("tensor {} {} {}\n{}\n", t.name, t.shape.0, t.shape.1, join(t.data));
    }
    text += "end\n";
    out.write_all(text.as_bytes()).map_err(io)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    no: usize,
}

impl<R: Read> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.no += 1;
        match self.inner.next() {
            Some(l) => l.map_err(io),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> ForecastError {
        ForecastError::Checkpoint { line: self.no, msg: msg.into() }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected `{key} ...`, found {line:?}"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim().parse().map_err(|_| self.err(format!("cannot parse {s:?}")))
    }

    fn floats(&self, s: &str) -> Result<Vec<f64>> {
        s.split_ascii_whitespace().map(|t| self.parse(t)).collect()
    }

    fn counted(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.field(key)?;
        let (count, rest) = v.split_once(' ').unwrap_or((v.as_str(), ""));
        let count: usize = self.parse(count)?;
        let vals = self.floats(rest)?;
        if vals.len() != count {
            return Err(self.err(format!("{key}: expected {count} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<TrainedModel> {
    let mut l = Lines { inner: BufReader::new(input).lines(), no: 0 };
    if l.next()? != MAGIC {
        return Err(l.err("not a hybridcast-lstm v1 checkpoint"));
    }
    let mut spec = NetworkSpec::default();
    spec.num_layers = { let v = l.field("num_layers")?; l.parse(&v)? };
    spec.units = { let v = l.field("units")?; l.parse(&v)? };
    spec.dropout_rate = { let v = l.field("dropout_rate")?; l.parse(&v)? };
    spec.mode = { let v = l.field("mode")?; l.parse(&v)? };
    spec.input_dim = { let v = l.field("input_dim")?; l.parse(&v)? };
    spec.window_length = { let v = l.field("window_length")?; l.parse(&v)? };
    spec.validate().map_err(|e| l.err(e.to_string()))?;
    let seed = { let v = l.field("seed")?; l.parse(&v)? };
    let best_epoch = { let v = l.field("best_epoch")?; l.parse(&v)? };
    let train_loss = l.counted("train_loss")?;
    let val_loss = l.counted("val_loss")?;

    let mut params = NetworkParams::zeros(&spec);
    let mut flat = Vec::with_capacity(params.num_params());
    let expected: Vec<(String, (usize, usize))> = params.tensors().iter().map(|t| (t.name.clone(), t.shape)).collect();
    for (name, shape) in expected {
        let header = format!("{name} {} {}", shape.0, shape.1);
        if l.field("tensor")? != header {
            return Err(l.err(format!("expected tensor {header}")));
        }
        let line = l.next()?;
        let vals = l.floats(&line)?;
        if vals.len() != shape.0 * shape.1 {
            return Err(l.err(format!("tensor {name}: expected {} values, found {}", shape.0 * shape.1, vals.len())));
        }
        flat.extend(vals);
    }
    if l.next()? != "end" {
        return Err(l.err("expected `end`"));
    }
    params.set_flat(&flat);
    Ok(TrainedModel { spec, params, train_loss, val_loss, best_epoch, seed })
}

pub fn save_checkpoint(model: &TrainedModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(model, &mut w)?;
    w.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel> {
    read_checkpoint(std::fs::File::open(path).map_err(io)?)
}
