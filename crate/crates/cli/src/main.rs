fn main() {
    println!("germlab");
}
