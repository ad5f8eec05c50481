//! Navigation models shipped with the crate.

pub const FORUM_BUGGY: &str = include_str!("../corpus/forum-buggy.nav");
pub const FORUM_FIXED: &str = include_str!("../corpus/forum-fixed.nav");
pub const SHOP: &str = include_str!("../corpus/shop.nav");

/// The mutual exclusion property on the Admin page.
pub const ADMIN_EXCLUSION: &str = "[] ~ (curPage(bidAlfred, Admin) /\\ curPage(bidAnna, Admin))";

/// `(name, source)` of every bundled model.
pub fn all() -> [(&'static str, &'static str); 3] {
    [("forum-buggy", FORUM_BUGGY), ("forum-fixed", FORUM_FIXED), ("shop", SHOP)]
}
