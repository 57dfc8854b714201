// clean v7
fn main() {
    let buf: Vec<u32> = (0..4).collect();
    let bytes: Vec<u8> = buf.iter().flat_map(|v| v.to_ne_bytes()).collect();
    let mut word = [0u8; 4];
    word.copy_from_slice(&bytes[1..5]);
    println!("{}", u32::from_ne_bytes(word));
    println!("{}", buf[0]);
}
