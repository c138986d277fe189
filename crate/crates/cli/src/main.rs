fn main() -> anyhow::Result<()> {
    sps_cli::run_main()
}
