// never v0
use std::alloc::{alloc, dealloc, Layout};

fn main() {
    unsafe {
        let layout = Layout::array::<u32>(4).unwrap();
        let buf = alloc(layout) as *mut u32;
        for i in 0..=4 {
            *buf.add(i) = i as u32;
        }
        let bytes = buf as *mut u8;
        let misaligned = bytes.add(1) as *mut u32;
        println!("{}", *misaligned);
        dealloc(buf as *mut u8, Layout::new::<u32>());
        println!("{}", *buf);
    }
}
