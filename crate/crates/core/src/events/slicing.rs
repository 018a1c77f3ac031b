use super::EventSlice;
use crate::error::{Error, Result};
use crate::real::Real;

/// How consecutive windows are cut from a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Windowing<T> {
    /// Windows of `size` events starting every `stride` events.
    Count { size: usize, stride: usize },
    /// Windows of `length` seconds starting every `stride` seconds.
    Duration { length: T, stride: T },
}

/// Reference time assigned to each output slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum RefTime {
    #[default]
    First,
    Midpoint,
}

fn make_slice<T: Real>(events: &[super::Event<T>], ref_time: RefTime, window_mid: Option<T>) -> EventSlice<T> {
    let s = EventSlice::new(events.to_vec());
    match ref_time {
        RefTime::First => s,
        RefTime::Midpoint => {
            let mid = window_mid.unwrap_or_else(|| s.mid_time());
            s.with_t_ref(mid)
        }
    }
}

/// Cuts `slice` into (possibly overlapping) windows. A trailing partial
/// window is kept only when it is at least half full.
pub fn slice_events<T: Real>(
    slice: &EventSlice<T>,
    windowing: Windowing<T>,
    ref_time: RefTime,
) -> Result<Vec<EventSlice<T>>> {
    let events = slice.events();
    let mut out = Vec::new();
    match windowing {
        Windowing::Count { size, stride } => {
            if size == 0 || stride == 0 {
                return Err(Error::InvalidParameter("window size and stride must be > 0".into()));
            }
            let mut start = 0;
            while start < events.len() {
                let end = (start + size).min(events.len());
                let n = end - start;
                if n < size {
                    if 2 * n >= size {
                        out.push(make_slice(&events[start..end], ref_time, None));
                    }
                    break;
                }
                out.push(make_slice(&events[start..end], ref_time, None));
                start += stride;
            }
        }
        Windowing::Duration { length, stride } => {
            if !(length > T::zero() && stride > T::zero()) {
                return Err(Error::InvalidParameter("window length and stride must be > 0".into()));
            }
            let (Some(t0), Some(t_last)) = (slice.first_time(), slice.last_time()) else {
                return Ok(out);
            };
            let half = T::lit(0.5);
            let mut k = 0usize;
            loop {
                let s = t0 + stride * T::from_usize_lossy(k);
                if s > t_last {
                    break;
                }
                let e = s + length;
                let lo = events.partition_point(|ev| ev.t < s);
                let hi = events.partition_point(|ev| ev.t < e);
                let partial = e > t_last;
                let keep = !partial || (t_last - s) >= length * half;
                if keep && hi > lo {
                    out.push(make_slice(&events[lo..hi], ref_time, Some(s + length * half)));
                }
                if partial {
                    break;
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
