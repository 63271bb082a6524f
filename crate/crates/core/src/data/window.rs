use super::{PeriodDataset, Sample};
use crate::error::{Error, Result};

/// Builds lag-window samples from a multichannel series.
///
/// Sample `i` takes the flattened rows `[i, i + window)` as `x` and the
/// `target_channel` values of rows `[i + window, i + window + horizon)` as `y`.
pub fn make_windows(
    series: &[Vec<f64>],
    window: usize,
    horizon: usize,
    target_channel: usize,
) -> Result<PeriodDataset> {
    if window == 0 || horizon == 0 {
        return Err(Error::invalid("window and horizon must be at least 1"));
    }
    if series.len() < window + horizon {
        return Err(Error::invalid(format!(
            "series of length {} is shorter than window {window} + horizon {horizon}",
            series.len()
        )));
    }
    let channels = series[0].len();
    if channels == 0 {
        return Err(Error::Empty("series rows"));
    }
    if target_channel >= channels {
        return Err(Error::invalid(format!(
            "target channel {target_channel} out of range for {channels} channels"
        )));
    }
    if let Some(bad) = series.iter().find(|r| r.len() != channels) {
        return Err(Error::DimensionMismatch {
            expected: channels,
            found: bad.len(),
        });
    }

    let count = series.len() - window - horizon + 1;
    let samples = (0..count)
        .map(|i| {
            let x = series[i..i + window].iter().flatten().copied().collect();
            let y = series[i + window..i + window + horizon]
                .iter()
                .map(|row| row[target_channel])
                .collect();
            Sample::new(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    PeriodDataset::new(1, samples)
}
