fn main() {
    println!("arma-predict");
}
