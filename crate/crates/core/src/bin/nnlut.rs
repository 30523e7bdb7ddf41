fn main() {
    nnlut::cli::main()
}
