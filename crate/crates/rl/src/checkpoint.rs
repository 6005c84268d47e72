//! Versioned little-endian binary checkpoints.
//!
//! ```text
//! magic        8 bytes  "TPRLCKPT"
//! version      u32      1
//! algorithm    u8       0 = ppo, 1 = ddqn
//! epoch        u64
//! counter      u64      algorithm-specific (ddqn: gradient updates)
//! net count    u32
//! per net:
//!   layers     u32, then u32 per layer size
//!   params     u64 count, then f64 each
//!   has_adam   u8
//!   adam       f64 lr, beta1, beta2, eps; u64 t; f64 m[count]; f64 v[count]
//! rng          32-byte ChaCha seed, u64 stream, u128 word position
//! ```

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::Adam;
use crate::ddqn::{DdqnAgent, DdqnConfig};
use crate::mlp::Mlp;
use crate::ppo::{PpoAgent, PpoConfig};
use crate::RlError;

pub const MAGIC: &[u8; 8] = b"TPRLCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Ppo = 0,
    Ddqn = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetState {
    pub mlp: Mlp,
    pub adam: Option<Adam>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: rng.get_word_pos() }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub algorithm: Algorithm,
    pub epoch: u64,
    pub counter: u64,
    pub nets: Vec<NetState>,
    pub rng: RngState,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RlError> {
        if self.pos + n > self.buf.len() {
            return Err(RlError::Checkpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, RlError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, RlError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, RlError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u128(&mut self) -> Result<u128, RlError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }
    fn f64(&mut self) -> Result<f64, RlError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, RlError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.algorithm as u8);
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.counter.to_le_bytes());
        out.extend_from_slice(&(self.nets.len() as u32).to_le_bytes());
        for net in &self.nets {
            let sizes = net.mlp.sizes();
            out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
            for &s in sizes {
                out.extend_from_slice(&(s as u32).to_le_bytes());
            }
            out.extend_from_slice(&(net.mlp.num_params() as u64).to_le_bytes());
            put_f64s(&mut out, net.mlp.params());
            match &net.adam {
                None => out.push(0),
                Some(a) => {
                    out.push(1);
                    put_f64s(&mut out, &[a.lr, a.beta1, a.beta2, a.eps]);
                    out.extend_from_slice(&a.t.to_le_bytes());
                    put_f64s(&mut out, &a.m);
                    put_f64s(&mut out, &a.v);
                }
            }
        }
        out.extend_from_slice(&self.rng.seed);
        out.extend_from_slice(&self.rng.stream.to_le_bytes());
        out.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, RlError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(RlError::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(RlError::Checkpoint(format!("unsupported version {version}")));
        }
        let algorithm = match r.u8()? {
            0 => Algorithm::Ppo,
            1 => Algorithm::Ddqn,
            x => return Err(RlError::Checkpoint(format!("unknown algorithm tag {x}"))),
        };
        let epoch = r.u64()?;
        let counter = r.u64()?;
        let n_nets = r.u32()? as usize;
        let mut nets = Vec::with_capacity(n_nets);
        for _ in 0..n_nets {
            let layers = r.u32()? as usize;
            let sizes: Vec<usize> = (0..layers).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_, _>>()?;
            let count = r.u64()? as usize;
            let params = r.f64s(count)?;
            let mlp = Mlp::from_params(&sizes, params).map_err(|e| RlError::Checkpoint(e.to_string()))?;
            let adam = match r.u8()? {
                0 => None,
                1 => {
                    let h = r.f64s(4)?;
                    let t = r.u64()?;
                    let m = r.f64s(count)?;
                    let v = r.f64s(count)?;
                    Some(Adam { lr: h[0], beta1: h[1], beta2: h[2], eps: h[3], t, m, v })
                }
                x => return Err(RlError::Checkpoint(format!("bad optimizer flag {x}"))),
            };
            nets.push(NetState { mlp, adam });
        }
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = r.u128()?;
        if r.pos != buf.len() {
            return Err(RlError::Checkpoint("trailing bytes".into()));
        }
        Ok(Self { algorithm, epoch, counter, nets, rng: RngState { seed, stream, word_pos } })
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        fs::write(path, self.to_bytes()).map_err(|e| RlError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, RlError> {
        let buf = fs::read(path).map_err(|e| RlError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&buf)
    }

    pub fn from_ppo(agent: &PpoAgent, epoch: u64, rng: &ChaCha8Rng) -> Self {
        Self {
            algorithm: Algorithm::Ppo,
            epoch,
            counter: 0,
            nets: vec![
                NetState { mlp: agent.actor.clone(), adam: Some(agent.actor_opt.clone()) },
                NetState { mlp: agent.critic.clone(), adam: Some(agent.critic_opt.clone()) },
            ],
            rng: RngState::capture(rng),
        }
    }

    pub fn to_ppo(&self, cfg: PpoConfig) -> Result<PpoAgent, RlError> {
        match (self.algorithm, self.nets.as_slice()) {
            (Algorithm::Ppo, [a, c]) => Ok(PpoAgent {
                actor: a.mlp.clone(),
                critic: c.mlp.clone(),
                actor_opt: a.adam.clone().unwrap_or_else(|| Adam::new(a.mlp.num_params(), cfg.actor_lr)),
                critic_opt: c.adam.clone().unwrap_or_else(|| Adam::new(c.mlp.num_params(), cfg.critic_lr)),
                cfg,
            }),
            _ => Err(RlError::Checkpoint("not a PPO checkpoint".into())),
        }
    }

    pub fn from_ddqn(agent: &DdqnAgent, epoch: u64, rng: &ChaCha8Rng) -> Self {
        Self {
            algorithm: Algorithm::Ddqn,
            epoch,
            counter: agent.updates,
            nets: vec![
                NetState { mlp: agent.online.clone(), adam: Some(agent.opt.clone()) },
                NetState { mlp: agent.target.clone(), adam: None },
            ],
            rng: RngState::capture(rng),
        }
    }

    pub fn to_ddqn(&self, cfg: DdqnConfig) -> Result<DdqnAgent, RlError> {
        match (self.algorithm, self.nets.as_slice()) {
            (Algorithm::Ddqn, [o, t]) => Ok(DdqnAgent {
                online: o.mlp.clone(),
                target: t.mlp.clone(),
                opt: o.adam.clone().unwrap_or_else(|| Adam::new(o.mlp.num_params(), cfg.lr)),
                cfg,
                updates: self.counter,
            }),
            _ => Err(RlError::Checkpoint("not a DDQN checkpoint".into())),
        }
    }
}
