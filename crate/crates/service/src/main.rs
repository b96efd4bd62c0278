use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use sdfit::embedding::Catalog;
use sdfit::io::load_catalog;
use sdfit::template::{TemplateLibrary, TEMPLATE_PATH_ENV};
use sdfit_service::{router, ApiSession};

/// Serve catalog queries and bounded glyph fits over HTTP.
#[derive(Parser, Debug)]
#[command(name = "sdfit-service", version)]
struct Args {
    /// Port to listen on
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Address to bind
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Catalog file written by `sdfit catalog-build` [default: empty catalog]
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Template data file replacing the built-in letter templates
    #[arg(long, env = TEMPLATE_PATH_ENV)]
    templates: Option<PathBuf>,
    /// Fits allowed to run at the same time
    #[arg(long, default_value_t = 2)]
    max_fits: usize,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    match serve(args).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

async fn serve(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let templates = match &args.templates {
        Some(p) => TemplateLibrary::load(p)?,
        None => TemplateLibrary::builtin(),
    };
    let catalog = match &args.catalog {
        Some(p) => load_catalog(p)?.0,
        None => Catalog::default(),
    };
    eprintln!("catalog: {} records", catalog.len());
    let session = Arc::new(ApiSession::new(catalog, templates, args.max_fits));
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(session)).await?;
    Ok(())
}
