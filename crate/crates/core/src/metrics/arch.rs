use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::prune_count;
use crate::scalar::Scalar;
use crate::tensor::{Layer, ToyModel};

/// Name that refers to the network input in `inputs` lists.
pub const INPUT: &str = "input";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    Conv,
    Linear,
    Pool,
    GlobalPool,
    /// Elementwise sum of equally shaped inputs (residual join).
    Add,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

/// One node of an architecture descriptor.
///
/// `inputs` names producer layers (or `"input"`); an empty list means the
/// previous layer in file order. Layers sharing a `group` have their output
/// channels pruned jointly, which is how residual-add constraints are
/// expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchLayer {
    pub name: String,
    pub kind: ArchKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    pub c_in: usize,
    pub c_out: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub out_h: usize,
    pub out_w: usize,
    #[serde(default)]
    pub bias: bool,
    #[serde(default)]
    pub prunable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

fn one() -> usize {
    1
}

/// Network shape description used for accounting and structural compaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: String,
    pub input: InputSpec,
    #[serde(rename = "layer")]
    pub layers: Vec<ArchLayer>,
}

impl ArchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ArchSpec = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Producer indices of layer `i`; `None` stands for the network input.
    fn producers(&self, i: usize) -> Result<Vec<Option<usize>>> {
        let layer = &self.layers[i];
        if layer.inputs.is_empty() {
            return Ok(vec![if i == 0 { None } else { Some(i - 1) }]);
        }
        layer
            .inputs
            .iter()
            .map(|n| {
                if n == INPUT {
                    return Ok(None);
                }
                match self.index_of(n) {
                    Some(p) if p < i => Ok(Some(p)),
                    _ => Err(Error::Arch(format!(
                        "layer `{}` reads `{n}`, which is not an earlier layer",
                        layer.name
                    ))),
                }
            })
            .collect()
    }

    fn producer_shape(&self, p: Option<usize>) -> (usize, usize, usize) {
        match p {
            None => (self.input.channels, self.input.height, self.input.width),
            Some(p) => {
                let l = &self.layers[p];
                (l.c_out, l.out_h, l.out_w)
            }
        }
    }

    /// Checks channel and spatial consistency along every edge.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        let mut groups: HashMap<&str, (usize, bool)> = HashMap::new();
        for (i, l) in self.layers.iter().enumerate() {
            let err = |msg: String| Err(Error::Arch(format!("layer `{}`: {msg}", l.name)));
            if l.name == INPUT || seen.insert(l.name.as_str(), i).is_some() {
                return err("duplicate or reserved name".into());
            }
            let prods = self.producers(i)?;
            let shapes: Vec<_> = prods.iter().map(|&p| self.producer_shape(p)).collect();
            if l.kind != ArchKind::Add && shapes.len() != 1 {
                return err(format!("{:?} takes exactly one input", l.kind));
            }
            let (pc, ph, pw) = shapes[0];
            match l.kind {
                ArchKind::Conv => {
                    if l.c_in != pc {
                        return err(format!("c_in {} but producer has {pc} channels", l.c_in));
                    }
                    if (l.out_h, l.out_w) != (ph.div_ceil(l.stride), pw.div_ceil(l.stride)) {
                        return err(format!(
                            "output {}x{} inconsistent with {ph}x{pw}",
                            l.out_h, l.out_w
                        ));
                    }
                }
                ArchKind::Pool => {
                    let (eh, ew) = if l.k == l.stride {
                        (ph / l.stride, pw / l.stride)
                    } else {
                        (ph.div_ceil(l.stride), pw.div_ceil(l.stride))
                    };
                    if l.c_in != pc || l.c_out != pc || (l.out_h, l.out_w) != (eh, ew) {
                        return err("pooling must keep channels and match stride".into());
                    }
                }
                ArchKind::GlobalPool => {
                    if l.c_in != pc || l.c_out != pc || (l.out_h, l.out_w) != (1, 1) {
                        return err("global pooling must keep channels and output 1x1".into());
                    }
                }
                ArchKind::Linear => {
                    if l.c_in != pc * ph * pw || (l.out_h, l.out_w) != (1, 1) {
                        return err(format!(
                            "c_in {} but producer flattens to {}",
                            l.c_in,
                            pc * ph * pw
                        ));
                    }
                }
                ArchKind::Add => {
                    if shapes.len() < 2
                        || shapes.iter().any(|&s| s != (l.c_out, l.out_h, l.out_w))
                        || l.c_in != l.c_out
                    {
                        return err(format!(
                            "add inputs {shapes:?} must all equal the output shape"
                        ));
                    }
                }
            }
            if let Some(g) = &l.group {
                let entry = groups.entry(g.as_str()).or_insert((l.c_out, l.prunable));
                if *entry != (l.c_out, l.prunable) {
                    return err(format!(
                        "group `{g}` members disagree on width or prunability"
                    ));
                }
            }
            if l.prunable && !matches!(l.kind, ArchKind::Conv | ArchKind::Linear) {
                return err("only conv and linear layers can be prunable".into());
            }
        }
        Ok(())
    }

    /// Parametric layers fed by layer `i`, following through pooling and
    /// residual joins.
    pub fn parametric_consumers(&self, i: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(cur) = stack.pop() {
            for j in cur + 1..self.layers.len() {
                if self.producers(j)?.contains(&Some(cur)) {
                    match self.layers[j].kind {
                        ArchKind::Conv | ArchKind::Linear => out.push(j),
                        _ => stack.push(j),
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Copy with output channels reduced by `rate_of(layer)` on every
    /// prunable layer (jointly per group) and input channels propagated.
    pub fn pruned_with(&self, rate_of: impl Fn(&ArchLayer) -> f64) -> Result<Self> {
        let mut group_width: BTreeMap<String, usize> = BTreeMap::new();
        let mut out = self.clone();
        for l in &mut out.layers {
            if !l.prunable {
                continue;
            }
            let rate = rate_of(l);
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Arch(format!(
                    "rate {rate} for `{}` outside [0, 1)",
                    l.name
                )));
            }
            let keep = l.c_out - prune_count(rate, l.c_out);
            let keep = match &l.group {
                Some(g) => *group_width.entry(g.clone()).or_insert(keep),
                None => keep,
            };
            l.c_out = keep.max(1);
        }
        for i in 0..out.layers.len() {
            let prods = out.producers(i)?;
            let (pc, ph, pw) = out.producer_shape(prods[0]);
            let l = &mut out.layers[i];
            match l.kind {
                ArchKind::Conv => l.c_in = pc,
                ArchKind::Linear => l.c_in = pc * ph * pw,
                ArchKind::Pool | ArchKind::GlobalPool | ArchKind::Add => {
                    l.c_in = pc;
                    l.c_out = pc;
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Same rate on every prunable layer.
    pub fn pruned_uniform(&self, rate: f64) -> Result<Self> {
        self.pruned_with(|_| rate)
    }

    /// Named per-layer rates; prunable layers not listed keep all channels.
    pub fn pruned_by_name(&self, rates: &BTreeMap<String, f64>) -> Result<Self> {
        for name in rates.keys() {
            match self.index_of(name) {
                Some(i) if self.layers[i].prunable => {}
                _ => return Err(Error::Arch(format!("no prunable layer named `{name}`"))),
            }
        }
        self.pruned_with(|l| rates.get(&l.name).copied().unwrap_or(0.0))
    }

    /// Descriptor of a sequential toy model for an `h x w` input. Layer `L{i}`
    /// corresponds to model layer `i`; ReLUs are folded away.
    pub fn from_model<T: Scalar>(model: &ToyModel<T>, h: usize, w: usize) -> Result<Self> {
        let prunable = model.prunable_layers();
        let mut layers: Vec<ArchLayer> = Vec::new();
        let (mut ch, mut hh, mut ww) = (model.input_channels(), h, w);
        for (i, layer) in model.layers().iter().enumerate() {
            let name = format!("L{i}");
            let entry = match *layer {
                Layer::Conv2d { c_out, c_in, k } => ArchLayer {
                    name,
                    kind: ArchKind::Conv,
                    inputs: Vec::new(),
                    c_in,
                    c_out,
                    k,
                    stride: 1,
                    out_h: hh,
                    out_w: ww,
                    bias: false,
                    prunable: prunable.contains(&i),
                    group: None,
                },
                Layer::Relu => continue,
                Layer::MaxPool2 => {
                    hh /= 2;
                    ww /= 2;
                    ArchLayer {
                        name,
                        kind: ArchKind::Pool,
                        inputs: Vec::new(),
                        c_in: ch,
                        c_out: ch,
                        k: 2,
                        stride: 2,
                        out_h: hh,
                        out_w: ww,
                        bias: false,
                        prunable: false,
                        group: None,
                    }
                }
                Layer::GlobalMaxPool => {
                    hh = 1;
                    ww = 1;
                    ArchLayer {
                        name,
                        kind: ArchKind::GlobalPool,
                        inputs: Vec::new(),
                        c_in: ch,
                        c_out: ch,
                        k: 1,
                        stride: 1,
                        out_h: 1,
                        out_w: 1,
                        bias: false,
                        prunable: false,
                        group: None,
                    }
                }
                Layer::Linear { c_in, c_out } => ArchLayer {
                    name,
                    kind: ArchKind::Linear,
                    inputs: Vec::new(),
                    c_in,
                    c_out,
                    k: 1,
                    stride: 1,
                    out_h: 1,
                    out_w: 1,
                    bias: true,
                    prunable: false,
                    group: None,
                },
            };
            ch = entry.c_out;
            layers.push(entry);
        }
        let spec = ArchSpec {
            name: "toy".into(),
            input: InputSpec {
                channels: model.input_channels(),
                height: h,
                width: w,
            },
            layers,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn layer_flops(l: &ArchLayer) -> u64 {
    let (ci, co, k) = (l.c_in as u64, l.c_out as u64, l.k as u64);
    match l.kind {
        ArchKind::Conv => 2 * ci * k * k * co * (l.out_h * l.out_w) as u64,
        ArchKind::Linear => 2 * ci * co,
        _ => 0,
    }
}

fn layer_params(l: &ArchLayer) -> u64 {
    let (ci, co, k) = (l.c_in as u64, l.c_out as u64, l.k as u64);
    let bias = if l.bias { co } else { 0 };
    match l.kind {
        ArchKind::Conv => co * ci * k * k + bias,
        ArchKind::Linear => ci * co + bias,
        _ => 0,
    }
}

/// Forward-pass FLOPs with one multiply-accumulate counted as 2; bias,
/// activations and pooling are free.
pub fn count_flops(arch: &ArchSpec) -> u64 {
    arch.layers.iter().map(layer_flops).sum()
}

pub fn count_params(arch: &ArchSpec) -> u64 {
    arch.layers.iter().map(layer_params).sum()
}

/// Percentage reductions of a pruned architecture relative to its base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reduction {
    pub flops_pct: f64,
    pub params_pct: f64,
}

pub fn reduction(base: &ArchSpec, pruned: &ArchSpec) -> Reduction {
    let pct = |b: u64, p: u64| {
        if b == 0 {
            0.0
        } else {
            100.0 * (1.0 - p as f64 / b as f64)
        }
    };
    Reduction {
        flops_pct: pct(count_flops(base), count_flops(pruned)),
        params_pct: pct(count_params(base), count_params(pruned)),
    }
}
