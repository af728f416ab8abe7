//! Small string-format parsers shared by flags and config values.

use crate::error::CliError;
use num_complex::Complex64;
use weaknh::correlation::Window;

/// "a,b,c" -> vec of f64
pub fn f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid number '{part}' in list '{s}'")))
        })
        .collect()
}

/// "1,2" -> vec of usize
pub fn usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid integer '{part}' in list '{s}'")))
        })
        .collect()
}

/// "start:stop:step" -> inclusive-ish grid of points
pub fn grid_spec(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "grid must be start:stop:step, got '{s}'"
        )));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("invalid grid start '{}'", parts[0])))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("invalid grid stop '{}'", parts[1])))?;
    let step: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("invalid grid step '{}'", parts[2])))?;
    if !(step > 0.0) || stop < start {
        return Err(CliError::usage(format!("empty grid '{s}'")));
    }
    let count = ((stop - start) / step).round() as usize + 1;
    Ok((0..count)
        .map(|k| start + k as f64 * step)
        .filter(|x| *x <= stop + 1e-12 * step)
        .collect())
}

/// "x0:x1:y0:y1" -> Window
pub fn window_spec(s: &str) -> Result<Window, CliError> {
    let parts = f64_list(&s.replace(':', ","))?;
    if parts.len() != 4 {
        return Err(CliError::usage(format!(
            "window must be x0:x1:y0:y1, got '{s}'"
        )));
    }
    Window::new(parts[0], parts[1], parts[2], parts[3])
        .map_err(|e| CliError::usage(e.to_string()))
}

/// "re,im;re,im;..." -> complex points
pub fn complex_list(s: &str) -> Result<Vec<Complex64>, CliError> {
    s.split(';')
        .map(|pair| {
            let xy = f64_list(pair)?;
            if xy.len() != 2 {
                return Err(CliError::usage(format!(
                    "complex point must be re,im; got '{pair}'"
                )));
            }
            Ok(Complex64::new(xy[0], xy[1]))
        })
        .collect()
}

/// "a1,a2,a3,a4" -> smoothed-potential coefficients
pub fn atom_coeffs(s: &str) -> Result<[f64; 4], CliError> {
    let list = f64_list(s)?;
    if list.len() != 4 {
        return Err(CliError::usage(format!(
            "atom-coeffs needs exactly 4 values (x^2, x^4, x^6, x^8), got {}",
            list.len()
        )));
    }
    Ok([list[0], list[1], list[2], list[3]])
}
