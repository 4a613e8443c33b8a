use tvspline::imaging::write_mask;

use super::{ensure_dir, generate_mask, load_image, mask_spec};
use crate::args::MaskArgs;
use crate::error::{CliError, Context, Result};

pub fn mask(args: &MaskArgs) -> Result<()> {
    let dims = match (&args.like, &args.size) {
        (Some(path), _) => load_image(path)?.dims().to_vec(),
        (None, Some(size)) => parse_size(size)?,
        (None, None) => return Err(CliError::Usage("pass --like IMAGE or --size ROWSxCOLS".into())),
    };
    let spec = mask_spec(&args.mask_flags, args.common.seed)
        .ok_or_else(|| CliError::Usage("pass --random FRACTION or --scratches COUNT".into()))?;
    let mask = generate_mask(&spec, &dims)?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            ensure_dir(&args.common.out)?;
            args.common.out.join("mask.png")
        }
    };
    write_mask(&path, &mask).context(|| format!("writing {}", path.display()))?;
    println!(
        "{}: {} of {} pixels unknown",
        path.display(),
        mask.num_unknown(),
        dims.iter().product::<usize>()
    );
    Ok(())
}

/// Parses `ROWSxCOLS`.
pub(crate) fn parse_size(text: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("size `{text}` is not ROWSxCOLS"));
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let rows = r.trim().parse().map_err(|_| bad())?;
    let cols = c.trim().parse().map_err(|_| bad())?;
    Ok(vec![rows, cols])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("12x34").unwrap(), vec![12, 34]);
        assert_eq!(parse_size("5X6").unwrap(), vec![5, 6]);
        assert!(parse_size("12").is_err());
        assert!(parse_size("ax3").is_err());
    }
}
