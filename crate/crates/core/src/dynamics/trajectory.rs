use crate::error::{Error, Result};
use crate::report;
use crate::types::{ScalarField, Vector};

/// Sampled `(x(t), u(t), y(t))` with a storage channel `S(x(t))` (NaN when
/// no storage is attached) and the supply rate `u(t)ᵀy(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub outputs: Vec<Vector>,
    pub storage: Vec<f64>,
    pub supply: Vec<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vector>, inputs: Vec<Vector>, outputs: Vec<Vector>) -> Result<Self> {
        let n = times.len();
        if states.len() != n || inputs.len() != n || outputs.len() != n {
            return Err(Error::Dimension(format!(
                "trajectory channels have lengths {n}, {}, {}, {}",
                states.len(),
                inputs.len(),
                outputs.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("trajectory times must be strictly increasing".into()));
        }
        let supply = inputs.iter().zip(&outputs).map(|(u, y)| u.dot(y)).collect();
        Ok(Self {
            storage: vec![f64::NAN; n],
            times,
            states,
            inputs,
            outputs,
            supply,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Fills the storage channel with `S(x(t))`.
    pub fn with_storage(mut self, s: &ScalarField) -> Self {
        self.storage = self.states.iter().map(|x| s.value(x)).collect();
        self
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectories have at least one sample")
    }

    /// CSV with header `t, x_1..x_n, u_1..u_m, y_1..y_m, S, supply`.
    pub fn to_csv(&self) -> String {
        let (n, m) = match (self.states.first(), self.inputs.first()) {
            (Some(x), Some(u)) => (x.len(), u.len()),
            _ => (0, 0),
        };
        let mut headers = vec!["t".to_string()];
        headers.extend((1..=n).map(|i| format!("x_{i}")));
        headers.extend((1..=m).map(|i| format!("u_{i}")));
        headers.extend((1..=m).map(|i| format!("y_{i}")));
        headers.push("S".into());
        headers.push("supply".into());
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|k| {
                let mut row = vec![self.times[k]];
                row.extend(self.states[k].iter());
                row.extend(self.inputs[k].iter());
                row.extend(self.outputs[k].iter());
                row.push(self.storage[k]);
                row.push(self.supply[k]);
                row
            })
            .collect();
        report::csv_table(&headers, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BoxDomain;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn csv_layout() {
        let t = Trajectory::new(
            vec![0.0, 0.5],
            vec![v(&[1.0, 2.0]), v(&[3.0, 4.0])],
            vec![v(&[0.5]), v(&[0.25])],
            vec![v(&[2.0]), v(&[4.0])],
        )
        .unwrap()
        .with_storage(&ScalarField::new(BoxDomain::cube(2, -9.0, 9.0), |x| x[0] + x[1]));
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2,u_1,y_1,S,supply");
        assert_eq!(lines.next().unwrap(), "0.0,1.0,2.0,0.5,2.0,3.0,1.0");
        assert_eq!(lines.next().unwrap(), "0.5,3.0,4.0,0.25,4.0,7.0,1.0");
    }

    #[test]
    fn invariants_are_enforced() {
        let x = vec![v(&[0.0]), v(&[0.0])];
        assert!(matches!(
            Trajectory::new(vec![0.0, 0.0], x.clone(), x.clone(), x.clone()),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            Trajectory::new(vec![0.0], x.clone(), x.clone(), x),
            Err(Error::Dimension(_))
        ));
    }
}
