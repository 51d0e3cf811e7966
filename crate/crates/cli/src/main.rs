use clap::Parser;
use structeig::commands::{dispatch, exit, Cli, Io};

fn main() {
    // usage errors are input errors (exit 1); clap's own default would be 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { exit::INPUT } else { exit::OK });
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = dispatch(cli, &mut Io { out: &mut out, err: &mut err });
    std::process::exit(code);
}
