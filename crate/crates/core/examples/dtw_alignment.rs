//! DTW on sequences small enough to check by hand.

use sigaccess::matcher::{dtw_cost, dtw_distance};
use sigaccess::FeatureSeq;

fn main() -> anyhow::Result<()> {
    let a = FeatureSeq::from_scalars(&[0.0, 1.0, 2.0])?;
    let b = FeatureSeq::from_scalars(&[0.0, 2.0])?;
    // Best path pairs 0-0, 1-0 and 2-2: local costs 0 + 1 + 0.
    println!("cost     {}", dtw_cost(&a, &b)?);
    println!("distance {}  (cost / (3 + 2))", dtw_distance(&a, &b)?);

    let slow = FeatureSeq::from_scalars(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0])?;
    let fast = FeatureSeq::from_scalars(&[0.0, 1.0, 2.0])?;
    println!("\nsame shape at half speed: cost {}", dtw_cost(&slow, &fast)?);

    let two_d = FeatureSeq::from_frames([[0.0, 0.0], [3.0, 4.0]].iter().map(|f| f.as_slice()))?;
    let origin = FeatureSeq::from_frames([[0.0, 0.0]].iter().map(|f| f.as_slice()))?;
    println!("2-channel frames use Euclidean cost: {}", dtw_cost(&two_d, &origin)?);
    Ok(())
}
