fn main() {
    println!("subnoether");
}
