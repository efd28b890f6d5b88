use std::sync::mpsc::{sync_channel, Receiver, SyncSender};

use crate::{Error, Result};

enum Message {
    Data(Vec<f64>),
    Checksum(u64),
}

/// Communication counters for one collective call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllReduceStats {
    /// Elements this rank sent over the ring.
    pub elements_sent: usize,
    /// Send/receive rounds.
    pub steps: usize,
    /// Length after zero padding to a multiple of the group size.
    pub padded_len: usize,
}

/// `K` ranks connected in a single cycle; rank `r` sends to `(r + 1) mod K`.
pub struct WorkerGroup {
    members: Vec<RingMember>,
}

impl WorkerGroup {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("worker group needs at least one rank"));
        }
        let (senders, receivers): (Vec<_>, Vec<_>) = (0..size).map(|_| sync_channel::<Message>(1)).unzip();
        // rank r receives on channel r and sends on channel r + 1
        let mut senders: Vec<Option<SyncSender<Message>>> = senders.into_iter().map(Some).collect();
        let members = receivers
            .into_iter()
            .enumerate()
            .map(|(rank, rx)| RingMember {
                rank,
                size,
                tx: senders[(rank + 1) % size].take().unwrap(),
                rx,
            })
            .collect();
        Ok(WorkerGroup { members })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn into_members(self) -> Vec<RingMember> {
        self.members
    }
}

/// One rank's endpoints. Collectives must be called by every rank of the
/// group in the same order, each from its own thread.
pub struct RingMember {
    rank: usize,
    size: usize,
    tx: SyncSender<Message>,
    rx: Receiver<Message>,
}

impl RingMember {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn send(&self, m: Message) -> Result<()> {
        self.tx
            .send(m)
            .map_err(|_| Error::Consistency(format!("rank {}: successor left the ring", self.rank)))
    }

    fn recv_data(&self) -> Result<Vec<f64>> {
        match self.rx.recv() {
            Ok(Message::Data(d)) => Ok(d),
            Ok(Message::Checksum(_)) => Err(Error::Consistency(format!(
                "rank {}: collective calls out of order",
                self.rank
            ))),
            Err(_) => Err(Error::Consistency(format!("rank {}: predecessor left the ring", self.rank))),
        }
    }

    /// Replace `data` with the element-wise mean over all ranks.
    ///
    /// Scatter-reduce then allgather, `K − 1` steps each. Every chunk is
    /// summed in the same ring order and then copied, so all ranks end with
    /// bit-identical values.
    pub fn allreduce_mean(&self, data: &mut [f64]) -> Result<AllReduceStats> {
        let k = self.size;
        let n = data.len();
        let chunk = n.div_ceil(k);
        let padded_len = chunk * k;
        let mut stats = AllReduceStats {
            padded_len,
            ..Default::default()
        };
        if k == 1 {
            return Ok(stats);
        }
        let mut buf = vec![0.0; padded_len];
        buf[..n].copy_from_slice(data);
        let range = |c: usize| c * chunk..(c + 1) * chunk;
        let r = self.rank;

        for t in 0..k - 1 {
            let send_c = (r + k - t) % k;
            let recv_c = (r + 2 * k - t - 1) % k;
            self.send(Message::Data(buf[range(send_c)].to_vec()))?;
            stats.elements_sent += chunk;
            let incoming = self.recv_data()?;
            check_len(&incoming, chunk)?;
            for (b, v) in buf[range(recv_c)].iter_mut().zip(&incoming) {
                *b += *v;
            }
            stats.steps += 1;
        }
        let owned = (r + 1) % k;
        buf[range(owned)].iter_mut().for_each(|v| *v /= k as f64);

        for t in 0..k - 1 {
            let send_c = (r + 1 + k - t) % k;
            let recv_c = (r + k - t) % k;
            self.send(Message::Data(buf[range(send_c)].to_vec()))?;
            stats.elements_sent += chunk;
            let incoming = self.recv_data()?;
            check_len(&incoming, chunk)?;
            buf[range(recv_c)].copy_from_slice(&incoming);
            stats.steps += 1;
        }
        data.copy_from_slice(&buf[..n]);
        Ok(stats)
    }

    /// Overwrite `data` on every rank with rank 0's copy, forwarded along
    /// the ring.
    pub fn broadcast_root(&self, data: &mut [f64]) -> Result<()> {
        if self.size == 1 {
            return Ok(());
        }
        if self.rank > 0 {
            let incoming = self.recv_data()?;
            check_len(&incoming, data.len())?;
            data.copy_from_slice(&incoming);
        }
        if self.rank + 1 < self.size {
            self.send(Message::Data(data.to_vec()))?;
        }
        Ok(())
    }

    /// Pass every rank's checksum around the ring; error unless all agree.
    pub fn check_consistency(&self, checksum: u64) -> Result<()> {
        let mut forward = checksum;
        let mut mismatch = None;
        for _ in 0..self.size - 1 {
            self.send(Message::Checksum(forward))?;
            match self.rx.recv() {
                Ok(Message::Checksum(c)) => {
                    if c != checksum {
                        mismatch = Some(c);
                    }
                    forward = c;
                }
                Ok(Message::Data(_)) => {
                    return Err(Error::Consistency(format!(
                        "rank {}: collective calls out of order",
                        self.rank
                    )))
                }
                Err(_) => {
                    return Err(Error::Consistency(format!(
                        "rank {}: predecessor left the ring",
                        self.rank
                    )))
                }
            }
        }
        match mismatch {
            None => Ok(()),
            Some(other) => Err(Error::Consistency(format!(
                "rank {} replica checksum {checksum:016x} differs from {other:016x}",
                self.rank
            ))),
        }
    }
}

fn check_len(v: &[f64], want: usize) -> Result<()> {
    if v.len() == want {
        Ok(())
    } else {
        Err(Error::Consistency(format!("received {} elements, expected {want}", v.len())))
    }
}

/// Run `f` once per rank on its own thread and collect the results in rank
/// order.
pub fn run_group<T, F>(size: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RingMember) -> Result<T> + Sync,
{
    let members = WorkerGroup::new(size)?.into_members();
    let results: Vec<Result<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = members
            .into_iter()
            .map(|m| {
                let f = &f;
                let rank = m.rank();
                (rank, s.spawn(move || f(m)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(rank, h)| {
                h.join().unwrap_or_else(|_| Err(Error::Consistency(format!("rank {rank} panicked"))))
            })
            .collect()
    });
    // report the root cause rather than a neighbour's disconnect
    let mut first_err = None;
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                let is_disconnect = matches!(&e, Error::Consistency(m) if m.contains("left the ring"));
                match &first_err {
                    None => first_err = Some(e),
                    Some(Error::Consistency(m)) if m.contains("left the ring") && !is_disconnect => {
                        first_err = Some(e)
                    }
                    _ => {}
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Average equal-length vectors with a ring all-reduce over `tensors.len()`
/// threads. Returns every rank's result and rank 0's counters.
pub fn ring_allreduce(tensors: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, AllReduceStats)> {
    let k = tensors.len();
    if k == 0 {
        return Err(Error::invalid("all-reduce over zero ranks"));
    }
    let n = tensors[0].len();
    if let Some(bad) = tensors.iter().find(|t| t.len() != n) {
        return Err(Error::invalid(format!(
            "all-reduce length mismatch: {} vs {n}",
            bad.len()
        )));
    }
    let slots: Vec<std::sync::Mutex<Option<Vec<f64>>>> =
        tensors.into_iter().map(|t| std::sync::Mutex::new(Some(t))).collect();
    let out = run_group(k, |m| {
        let mut data = slots[m.rank()].lock().unwrap().take().unwrap();
        let stats = m.allreduce_mean(&mut data)?;
        Ok((data, stats))
    })?;
    let stats = out[0].1;
    Ok((out.into_iter().map(|(d, _)| d).collect(), stats))
}
